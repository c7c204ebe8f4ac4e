import pytest

from hodg.config import ConfigError, RunConfig


def test_round_trip(tmp_path):
    cfg = RunConfig(
        gen_kind="tri", gen_nx=5, gen_ny=7, gen_extent=(0.0, -1.0, 2.5, 1.0),
        gamma=1.4, mach=0.45, angle_deg=12.5, order=2, cfl=0.25,
        dt_mode="global", t_final=1.5, max_iterations=400,
        precision_mode="mp_fixed", switch_iter=150, workers=2,
        renumber=True, randomize_cells=9, output_prefix=str(tmp_path / "o"),
        initial_kind="vortex", initial_x0=1.0, initial_y0=0.5,
    )
    path = tmp_path / "case.ini"
    cfg.save(path)
    back = RunConfig.from_ini(path)
    assert back == cfg


def test_parse_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[mesh]\ngenerator = quad\nnx = 2\nny = 2\n[solver]\nwat = 1\n")
    with pytest.raises(ConfigError, match="wat"):
        RunConfig.from_ini(path)


def test_parse_rejects_unknown_section(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[physics]\ngamma = 1.4\n")
    with pytest.raises(ConfigError, match=r"\[physics\]"):
        RunConfig.from_ini(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        RunConfig.from_ini(tmp_path / "nope.ini")


def test_needs_mesh_source():
    with pytest.raises(ConfigError):
        RunConfig()


def test_validation_errors():
    with pytest.raises(ConfigError):
        RunConfig(gen_kind="quad", gen_nx=2, gen_ny=2, order=5)
    with pytest.raises(ConfigError):
        RunConfig(gen_kind="quad", gen_nx=2, gen_ny=2, mach=0.0)
    with pytest.raises(ConfigError):
        RunConfig(gen_kind="hex", gen_nx=2, gen_ny=2)
    with pytest.raises(ConfigError):
        RunConfig(gen_kind="quad", gen_nx=2, gen_ny=2, workers=0)


def test_mu_derived_from_reynolds():
    cfg = RunConfig(gen_kind="quad", gen_nx=2, gen_ny=2, ivis=1, mach=0.3, reynolds=5000.0)
    gas = cfg.gas_model()
    a = (1.4 * 1.0) ** 0.5
    assert gas.mu_dyn == pytest.approx(0.3 * a / 5000.0)
    # explicit viscosity wins over the Reynolds derivation
    cfg2 = RunConfig(
        gen_kind="quad", gen_nx=2, gen_ny=2, ivis=1, mach=0.3,
        reynolds=5000.0, mu_dyn=0.01,
    )
    assert cfg2.gas_model().mu_dyn == 0.01


def test_onoff_parsing(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[mesh]\ngenerator = quad\nnx = 2\nny = 2\n[solver]\nrenumber = on\n")
    assert RunConfig.from_ini(path).renumber is True
    path.write_text("[mesh]\ngenerator = quad\nnx = 2\nny = 2\n[solver]\nrenumber = maybe\n")
    with pytest.raises(ConfigError):
        RunConfig.from_ini(path)


def test_freestream_state():
    cfg = RunConfig(gen_kind="quad", gen_nx=2, gen_ny=2, mach=0.5, angle_deg=0.0)
    q = cfg.freestream_conserved()
    assert q.rho == pytest.approx(1.0)
    a = (1.4) ** 0.5
    assert q.rho_u == pytest.approx(0.5 * a)
    assert q.rho_v == pytest.approx(0.0, abs=1e-15)
