import numpy as np
import pytest

from hodg import mesh as M
from hodg.perf import (
    BOUNDARY_FLOPS,
    INVISCID_VOL_FLOPS,
    PRIM_FLOPS,
    ROE_FLOPS,
    MachineModel,
    PerfSample,
    count_flops_and_bytes,
    dual_phase,
    emit_roofline_csv,
    emit_timing_csv,
    roofline_attainable,
)
from hodg.physics import GasModel

GAS = GasModel()


class TestDualPhase:
    def test_synthetic_timer(self):
        # 6 s for 1000 iterations, 10 s for 2000: 4 ms per iteration
        def stub(n):
            t = {1000: 6.0, 2000: 10.0}[n]
            return PerfSample(wall_seconds=t, flops=100.0 * n, dram_bytes=8.0 * n, iterations=n)

        s = dual_phase(stub, 1000, 2000)
        assert s.wall_seconds == pytest.approx(0.004)
        assert s.flops == pytest.approx(100.0)
        assert s.dram_bytes == pytest.approx(8.0)

    def test_overhead_cancels_exactly(self):
        # per-iteration cost c plus fixed overhead o: dual-phase returns c
        # regardless of o
        c, o = 0.37, 123.456

        def stub(n):
            return PerfSample(wall_seconds=o + c * n, flops=n, dram_bytes=n, iterations=n)

        for n1, n2 in [(1, 2), (10, 1000), (5, 7)]:
            s = dual_phase(stub, n1, n2)
            assert s.wall_seconds == pytest.approx(c, rel=1e-12)

    def test_rejects_bad_iteration_counts(self):
        stub = lambda n: PerfSample(1.0, 1.0, 1.0, n)
        with pytest.raises(ValueError):
            dual_phase(stub, 100, 100)
        with pytest.raises(ValueError):
            dual_phase(stub, 0, 10)

    def test_matches_analytic_counter_on_real_run(self):
        from hodg.config import RunConfig
        from hodg.timestepping import run

        cfg = RunConfig(gen_kind="quad", gen_nx=4, gen_ny=4, order=1, max_iterations=1)

        def run_fn(n):
            import dataclasses

            art = run(dataclasses.replace(cfg, max_iterations=n))
            return PerfSample(
                wall_seconds=art.setup_seconds + art.iterate_seconds,
                flops=art.flops,
                dram_bytes=art.dram_bytes,
                iterations=n,
            )

        run_fn(1)  # warm the compiled kernels so timing is comparable
        s = dual_phase(run_fn, 2, 12)
        per_iter, per_bytes = count_flops_and_bytes(
            M.generate_quad_grid(4, 4), 1, GAS
        )
        assert s.flops == pytest.approx(per_iter, rel=1e-12)
        assert s.dram_bytes == pytest.approx(per_bytes, rel=1e-12)


class TestAnalyticCounter:
    def test_hand_count_single_cell_order0(self):
        # 1x1 quad at order 0: nb = 1, one volume point, one face point,
        # 4 boundary faces and no interior ones
        m = M.generate_quad_grid(1, 1)
        total, _, parts = count_flops_and_bytes(m, 0, GAS, detail=True)
        trace = 2  # one mul + one add per basis function
        flux = 4 * (4 * trace + PRIM_FLOPS + BOUNDARY_FLOPS + ROE_FLOPS)
        vol = 1 * (4 * trace + PRIM_FLOPS + INVISCID_VOL_FLOPS + 18)
        gather = 4 * (3 + 9)
        solve = 1 * 8
        dt = 1 * (8 + 20)
        rk = 1 * 4 * 6
        assert parts["flux_pass"] == flux
        assert parts["cell_pass"] == vol + gather + solve
        assert parts["dt_pass"] == dt
        assert parts["rk_updates"] == rk
        assert total == dt + 2 * (flux + vol + gather + solve) + rk

    def test_bytes_double_from_32_to_64(self):
        m = M.generate_quad_grid(5, 4)
        _, b32 = count_flops_and_bytes(m, 1, GAS, precision_bits=32)
        _, b64 = count_flops_and_bytes(m, 1, GAS, precision_bits=64)
        assert b64 == 2 * b32

    def test_flops_scale_linearly_with_cells(self):
        f1, _ = count_flops_and_bytes(M.generate_quad_grid(32, 32), 1, GAS)
        f2, _ = count_flops_and_bytes(M.generate_quad_grid(64, 64), 1, GAS)
        per1 = f1 / 32**2
        per2 = f2 / 64**2
        # boundary faces make coarser grids slightly cheaper per cell
        assert abs(per1 - per2) / per2 < 0.02

    def test_viscous_counts_higher(self):
        m = M.generate_quad_grid(8, 8)
        fe, be = count_flops_and_bytes(m, 1, GAS)
        ns = GasModel(mu_dyn=0.01, ivis=1)
        fv, bv = count_flops_and_bytes(m, 1, ns)
        assert fv > fe and bv > be

    def test_insensitive_to_renumbering(self):
        from hodg.renumber import apply_permutation, random_permutation

        m = M.generate_quad_grid(8, 8)
        f1, b1 = count_flops_and_bytes(m, 2, GAS)
        m2 = apply_permutation(m, random_permutation(m.n_cells, 3))
        f2, b2 = count_flops_and_bytes(m2, 2, GAS)
        assert (f1, b1) == (f2, b2)


class TestRoofline:
    def test_bandwidth_bound_case(self):
        m = MachineModel("gpu", 7e12, 9e11)
        assert roofline_attainable(m, 0.125) == pytest.approx(1.125e11)

    def test_compute_bound_limit(self):
        m = MachineModel("gpu", 7e12, 9e11)
        assert roofline_attainable(m, 1e9) == 7e12

    def test_ridge_point(self):
        m = MachineModel("cpu", 3e12, 2e11)
        ridge = m.peak_flops / m.peak_bandwidth
        assert roofline_attainable(m, ridge) == pytest.approx(m.peak_flops)

    def test_monotone_in_ai(self):
        m = MachineModel("cpu", 3e12, 2e11)
        ais = np.linspace(0, 50, 200)
        vals = [roofline_attainable(m, ai) for ai in ais]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert max(vals) <= m.peak_flops

    def test_negative_ai_rejected(self):
        with pytest.raises(ValueError):
            roofline_attainable(MachineModel("x", 1.0, 1.0), -0.1)


class TestCsvEmit:
    def test_roofline_rows_and_bound_column(self, tmp_path):
        sample = PerfSample(wall_seconds=1.0, flops=1e9, dram_bytes=8e9, iterations=1)
        machines = [MachineModel("mem-bound", 1e13, 1e11),
                    MachineModel("cpu-bound", 1e7, 1e12)]
        path = tmp_path / "roofline.csv"
        emit_roofline_csv([("case", sample)], machines, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == "label,ai,achieved_flops,machine,attainable_flops,bound"
        rows = [l.split(",") for l in lines[2:]]
        assert [r[5] for r in rows] == ["memory", "compute"]
        assert float(rows[0][1]) == pytest.approx(0.125)

    def test_check_flags_impossible_samples(self, tmp_path):
        # claims 1e12 flop/s at ai = 0.125 on a 1e11 B/s machine
        sample = PerfSample(wall_seconds=1.0, flops=1e12, dram_bytes=8e12, iterations=1)
        machine = MachineModel("small", 1e13, 1e11)
        with pytest.raises(ValueError):
            emit_roofline_csv([("case", sample)], [machine], tmp_path / "r.csv", check=True)
        ok = PerfSample(wall_seconds=1.0, flops=1e10, dram_bytes=8e10, iterations=1)
        emit_roofline_csv([("ok", ok)], [machine], tmp_path / "r2.csv", check=True)

    def test_empty_inputs_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_roofline_csv([], [MachineModel("m", 1.0, 1.0)], tmp_path / "x.csv")
        with pytest.raises(ValueError):
            emit_roofline_csv(
                [("a", PerfSample(1.0, 1.0, 1.0, 1))], [], tmp_path / "x.csv"
            )

    def test_timing_csv(self, tmp_path):
        path = tmp_path / "timing.csv"
        emit_timing_csv([("grid", 1, 0.5), ("grid", 8, 0.125)], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "label,workers,seconds_per_iter"
        assert lines[1] == "grid,1,0.5"


class TestPerfSample:
    def test_validation(self):
        with pytest.raises(ValueError):
            PerfSample(-1.0, 0.0, 0.0, 0)

    def test_derived_quantities(self):
        s = PerfSample(2.0, 8e9, 2e9, 10)
        assert s.achieved_flops == pytest.approx(4e9)
        assert s.arithmetic_intensity == pytest.approx(4.0)
