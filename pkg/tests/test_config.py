import pytest

from aldlab.config import (
    ConfigError,
    apply_ci_profile,
    load_config,
    parse_config_text,
)

MINIMAL = """
[experiment]
kind = fig2_bias_vs_dim

[variant solo]
gamma_kind = constant
gamma_scale = 1.0
cbase_kind = constant
cbase_scale = 1.0
"""


def test_minimal_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.experiment == "fig2_bias_vs_dim"
    assert cfg.schedule.n_steps == 20000
    assert cfg.schedule.dt == pytest.approx(9e-3)
    assert cfg.sampling.n_chains == 2500
    assert cfg.sweep.d_values[0] == 1 and cfg.sweep.d_values[-1] == 65
    assert cfg.variants[0].name == "solo"


def test_shipped_configs_parse():
    for name in ("fig1", "fig2", "fig3", "knn_robustness", "bounds"):
        cfg = load_config(f"configs/{name}.cfg")
        assert cfg.experiment


def test_unknown_key_rejected():
    bad = MINIMAL + "\n[schedule]\nn_step = 100\n"
    with pytest.raises(ConfigError, match="unknown key 'n_step'"):
        parse_config_text(bad)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config_text(MINIMAL + "\n[scheduling]\n")


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError, match="unknown experiment kind"):
        parse_config_text("[experiment]\nkind = fig9\n")


def test_duplicate_key_rejected():
    bad = MINIMAL + "\n[schedule]\nn_steps = 10\nn_steps = 20\n"
    with pytest.raises(ConfigError, match="duplicate key"):
        parse_config_text(bad)


def test_bad_simplex_rejected():
    bad = MINIMAL + "\n[target]\nweights = 0.7, 0.2\n"
    with pytest.raises(ConfigError, match="simplex"):
        parse_config_text(bad)


def test_misspecified_variant_needs_perturbation():
    bad = MINIMAL.replace("gamma_kind = constant", "drift = misspecified\ngamma_kind = constant")
    with pytest.raises(ConfigError, match="no perturbation"):
        parse_config_text(bad)


def test_nonincreasing_d_rejected():
    bad = MINIMAL + "\n[sweep]\nd_values = 5, 5, 10\n"
    with pytest.raises(ConfigError, match="increasing"):
        parse_config_text(bad)


def test_ci_profile_preserves_horizon():
    cfg = load_config("configs/fig2.cfg")
    t_full = (cfg.schedule.n_steps - 1) * cfg.schedule.dt
    ci = apply_ci_profile(cfg)
    assert ci.schedule.n_steps == 2000
    assert (ci.schedule.n_steps - 1) * ci.schedule.dt == pytest.approx(t_full)
    assert ci.sampling.n_chains == 1000
    assert max(ci.sweep.d_values) <= 25
    assert ci.output.csv.endswith("_ci.csv")


def test_ci_profile_fig1_keeps_grid():
    cfg = load_config("configs/fig1.cfg")
    ci = apply_ci_profile(cfg)
    assert ci.schedule.dt == cfg.schedule.dt
    assert ci.sweep.step_cap == 20000
    assert ci.sweep.d_values == (1, 5, 12)


def test_digest_stable_and_sensitive():
    a = parse_config_text(MINIMAL)
    b = parse_config_text(MINIMAL)
    assert a.digest() == b.digest()
    c = parse_config_text(MINIMAL + "\n[schedule]\nn_steps = 123\n")
    assert a.digest() != c.digest()
