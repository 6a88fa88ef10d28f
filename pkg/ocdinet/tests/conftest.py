import textwrap

import numpy as np
import pytest
import torch

import ocdinet as o


@pytest.fixture(scope="session")
def bundle(tmp_path_factory):
    """A small case bundle generated through the reconstruction CLI."""
    from smsrecon.cli import main as smsrecon_main

    root = tmp_path_factory.mktemp("case")
    cfg = root / "run.cfg"
    cfg.write_text(
        textwrap.dedent(
            """
            [phantom]
            rows = 32
            cols = 32
            coils = 2
            seed = 2

            [scheme]
            b = 3

            [mask]
            r = 2
            acs = 12

            [seeds]
            noise_seed = 3

            [output]
            dir = bundle
            """
        )
    )
    assert smsrecon_main(["simulate", "--config", str(cfg)]) == 0
    return root / "bundle"


@pytest.fixture(scope="session")
def training_arrays(bundle):
    case = o.load_training_case(bundle)
    return o.training_tensors(case)


@pytest.fixture(scope="session")
def trained(training_arrays):
    """Briefly trained tiny model (conditioning and serving tests)."""
    terminal, clean, stage = training_arrays
    cfg = o.TrainConfig(steps=60, levels=2, base_channels=8, batch=2, lr=2e-3, seed=1)
    model, curve = o.train_on_arrays(terminal, clean, stage, cfg)
    model.eval()
    return model, cfg, curve


@pytest.fixture(scope="session")
def weights_file(trained, tmp_path_factory):
    model, cfg, _ = trained
    path = tmp_path_factory.mktemp("weights") / "model.pt"
    o.save_weights(model, cfg, path)
    return path


def random_state(seed, coils=2, rows=16, cols=16):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((coils, rows, cols)) + 1j * rng.standard_normal(
        (coils, rows, cols)
    )


def tiny_model(coils=2, levels=2, base=8, seed=0):
    torch.manual_seed(seed)
    return o.DualStreamNet(o.ModelConfig(coils=coils, levels=levels, base_channels=base))
