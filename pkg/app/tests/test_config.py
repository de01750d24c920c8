import pytest
from pathlib import Path
from core.config import AppConfig, load_app_config, save_app_config
from core.errors import ConfigError

def test_load_save_config():
    # Carga configuración real del proyecto
    cfg = load_app_config()
    cfg_path = Path(cfg.config_dir) / "app_config.json"

    # Guarda el contenido original para restaurar al final
    original_text = cfg_path.read_text(encoding="utf-8") if cfg_path.exists() else None

    try:
        # Cambia un valor y persiste
        cfg.threads = 3
        cfg.log_level = "DEBUG"
        save_app_config(cfg)

        # Recarga y verifica
        cfg2 = load_app_config()
        assert cfg2.threads == 3
        assert cfg2.log_level == "DEBUG"
        assert Path(cfg2.runs_dir).is_absolute()
        assert Path(cfg2.registry_path).is_absolute()
    finally:
        # Restaurar archivo original
        if original_text is None:
            if cfg_path.exists():
                cfg_path.unlink()
        else:
            cfg_path.write_text(original_text, encoding="utf-8")


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("CATL_P_GRID_POINTS", "500")
    monkeypatch.setenv("CATL_PROGRESS", "false")
    monkeypatch.setenv("CATL_EIGEN_CUTOFF", "1e-9")
    cfg = load_app_config()
    assert cfg.p_grid_points == 500
    assert cfg.progress is False
    assert cfg.eigen_cutoff == 1e-9
    assert AppConfig().p_grid_points == 1000


def test_invalid_values_raise_config_error(monkeypatch):
    monkeypatch.setenv("CATL_THREADS", "0")
    with pytest.raises(ConfigError) as exc:
        load_app_config()
    assert exc.value.field == "threads"

    monkeypatch.setenv("CATL_THREADS", "2")
    monkeypatch.setenv("CATL_LOG_LEVEL", "verbose")
    with pytest.raises(ConfigError) as exc:
        load_app_config()
    assert exc.value.field == "log_level"
