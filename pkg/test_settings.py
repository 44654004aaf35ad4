import pytest
from pydantic import ValidationError

from config.settings import GenConfig, OptConfig, Settings, SolverConfig, load_solver_config


def test_defaults():
    config = SolverConfig()
    assert config.rw.theta == 0.5
    assert config.pc.eps_ci == 0.01 and config.pc.delta == 0.1
    assert (config.opt.hidden, config.opt.lambda1, config.opt.tau_lo, config.opt.tau_hi) == (8, 0.01, 0.35, 0.65)
    assert config.opt.h_tol == 1e-8 and config.opt.rho_max == 1e16


def test_label_shares_must_sum_to_one():
    with pytest.raises(ValidationError):
        GenConfig(target_label_shares={"activated": 0.5, "inactivated": 0.3, "undetermined": 0.3})
    with pytest.raises(ValidationError):
        GenConfig(target_label_shares={"activated": 1.0})


def test_unknown_keys_are_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"opt": {"tau_low": 0.3}}', encoding="utf-8")
    with pytest.raises(ValidationError) as info:
        load_solver_config(str(path))
    assert "tau_low" in str(info.value)


def test_partial_config_keeps_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"opt": {"tau_lo": 0.3}}', encoding="utf-8")
    config = load_solver_config(str(path))
    assert config.opt.tau_lo == 0.3
    assert config.opt.tau_hi == OptConfig().tau_hi
    assert load_solver_config(None) == SolverConfig()


def test_environment_checks(monkeypatch):
    settings = Settings()
    monkeypatch.setattr(settings, "WORKERS", 0)
    assert settings.validate() == ["WORKERS must be >= 1"]
    monkeypatch.setattr(settings, "ENVIRONMENT", "production")
    monkeypatch.delenv("LOG_FILE", raising=False)
    assert settings.is_production
    assert settings.log_file is None


def test_settings_only_expose_what_the_workbench_reads():
    settings = Settings()
    assert not hasattr(settings, "DEBUG")
    assert not hasattr(settings, "is_development")
    assert set(OptConfig().model_dump()) >= {"lambda2", "second_init_scale", "weight_bound", "machine_sink"}
