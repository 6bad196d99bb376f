"""Partitioned trapezoidal solver: free steps, coupling, sub-cycling."""

import numpy as np
import pytest

from dynsub import (
    CoupledSystem,
    CouplingTopology,
    DivergenceError,
    LinearSubstructure,
    PartitionedSolver,
    SolverConfig,
    SolverError,
    assemble_first_order,
    analytic_sdof,
    effective_matrix,
    free_step,
    simulate,
    tangent_at_zero,
)
from dynsub.generators import suspension_substructure

from conftest import linear_suspension_analog, multisine_table, wheel_forces


def sdof(m=1.0, k=1.0, c=0.0):
    return LinearSubstructure(
        mass=[[m]], damping=[[c]], stiffness=[[k]],
        internal_dofs=(), boundary_dofs=(0,),
    )


def sdof_system(**kwargs):
    return CoupledSystem(substructures={"osc": sdof(**kwargs)}, topology=CouplingTopology(()))


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(SolverError):
            SolverConfig(dt=-1.0, duration=1.0)
        with pytest.raises(SolverError):
            SolverConfig(dt=1e-3, duration=1.0, gamma=0.0)
        with pytest.raises(SolverError):
            SolverConfig(dt=1e-3, duration=1.0, gamma=1.5)
        with pytest.raises(SolverError):
            SolverConfig(dt=1e-3, duration=1.0, subcycles=0)
        with pytest.raises(SolverError):
            SolverConfig(dt=1e-3, duration=0.0)

    def test_step_count(self):
        assert SolverConfig(dt=1e-3, duration=1.0).n_steps == 1000


class TestEffectiveMatrix:
    def test_hand_assembled_sdof(self):
        # m=1, k=1, c=0, gamma=0.5, dt=0.1: D = [[1, -0.05], [0.05, 1]]
        d = effective_matrix(assemble_first_order(sdof()), dt=0.1, gamma=0.5)
        assert np.allclose(d.matrix, [[1.0, -0.05], [0.05, 1.0]], rtol=1e-14)

    def test_gamma_zero_limit_is_mass_operator(self):
        # gamma -> 0: D -> A (probe with a tiny gamma; config forbids exactly 0)
        form = assemble_first_order(sdof(m=2.0, k=5.0))
        d = effective_matrix(form, dt=0.1, gamma=1e-300)
        assert np.allclose(d.matrix, form.A)

    def test_constant_over_simulation(self):
        # tangent-based D never changes: the solver factorizes once
        system = sdof_system()
        solver = PartitionedSolver(system, SolverConfig(dt=1e-2, duration=0.1))
        before = solver.effective["osc"].matrix.copy()
        solver.run({"osc": np.ones((11, 1))})
        assert np.array_equal(solver.effective["osc"].matrix, before)

    def test_singular_reported_with_parameters(self):
        bad = LinearSubstructure(
            mass=[[1.0]], damping=[[0.0]], stiffness=[[-100.0]],
            internal_dofs=(), boundary_dofs=(0,),
        )
        with pytest.raises(SolverError, match="dt=0.2"):
            effective_matrix(assemble_first_order(bad), dt=0.2, gamma=0.5)


class TestFreeStep:
    def test_zero_state_zero_force(self):
        form = assemble_first_order(sdof())
        d = effective_matrix(form, 0.01, 0.5)
        y, ydot = free_step(form, d, np.zeros(2), np.zeros(2), np.zeros(2), 0.01, 0.5)
        assert np.array_equal(y, np.zeros(2))
        assert np.array_equal(ydot, np.zeros(2))

    def test_single_step_local_accuracy(self):
        # undamped oscillator from [1, 0]: after one step u ~ cos(dt) + O(dt^3)
        form = assemble_first_order(sdof())
        dt = 0.01
        d = effective_matrix(form, dt, 0.5)
        y0 = np.array([1.0, 0.0])
        ydot0 = np.array([0.0, -1.0])  # consistent rate: udot=v=0, vdot=-k/m u
        y1, _ = free_step(form, d, y0, ydot0, np.zeros(2), dt, 0.5)
        assert abs(y1[0] - np.cos(dt)) < dt**3

    def test_global_second_order_convergence(self):
        errs = {}
        for dt in (1e-2, 5e-3):
            cfg = SolverConfig(dt=dt, duration=1.0)
            traj = simulate(sdof_system(), cfg, initial={"osc": np.array([1.0, 0.0])})
            u_exact, _ = analytic_sdof(1.0, 0.0, 1.0, 1.0, 0.0, traj.times[-1])
            errs[dt] = abs(traj.states["osc"][-1, 0] - u_exact[0])
        assert 3.5 <= errs[1e-2] / errs[5e-3] <= 4.5

    def test_energy_conserved_undamped(self):
        # trapezoidal rule preserves the discrete quadratic energy to rounding
        k = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
        sub = LinearSubstructure(
            mass=np.eye(3), damping=np.zeros((3, 3)), stiffness=k,
            internal_dofs=(0, 1), boundary_dofs=(2,),
        )
        system = CoupledSystem(substructures={"s": sub}, topology=CouplingTopology(()))
        cfg = SolverConfig(dt=0.05, duration=500.0)  # 10^4 steps
        y0 = np.zeros(6)
        y0[:3] = [0.3, -0.1, 0.7]
        traj = simulate(system, cfg, initial={"s": y0})
        u, v = traj.states["s"][:, :3], traj.states["s"][:, 3:]
        energy = 0.5 * (np.einsum("ij,ij->i", v, v) + np.einsum("ij,jk,ik->i", u, k, u))
        assert np.abs(energy - energy[0]).max() <= 1e-10 * energy[0]


class TestSimulate:
    def test_zero_input_zero_trajectory(self, desk):
        cfg = SolverConfig(dt=1e-3, duration=0.02)
        traj = simulate(desk, cfg)
        for sid in desk.substructures:
            assert np.all(traj.states[sid] == 0.0)
        assert np.all(traj.multipliers == 0.0)

    def test_single_substructure_matches_repeated_free_steps(self):
        sub = sdof(k=4.0, c=0.3)
        system = CoupledSystem(substructures={"osc": sub}, topology=CouplingTopology(()))
        cfg = SolverConfig(dt=0.01, duration=0.2)
        forces = np.column_stack([np.cos(np.arange(cfg.n_steps + 1) * 0.3)])
        traj = simulate(system, cfg, {"osc": forces})

        form = assemble_first_order(sub)
        d = effective_matrix(form, cfg.dt, cfg.gamma)
        y = np.zeros(2)
        ydot = np.array([0.0, forces[0, 0]])  # consistent start
        for step in range(1, cfg.n_steps + 1):
            y, ydot = free_step(form, d, y, ydot, np.array([0.0, forces[step, 0]]), cfg.dt, cfg.gamma)
            assert np.allclose(traj.states["osc"][step], y, atol=1e-15)

    def test_trajectory_layout(self, desk):
        cfg = SolverConfig(dt=1e-3, duration=0.01)
        times = np.arange(cfg.n_steps + 1) * cfg.dt
        traj = simulate(desk, cfg, {"suspension": wheel_forces(desk, "suspension", times)})
        assert len(traj.times) == cfg.n_steps + 1
        assert np.allclose(np.diff(traj.times), cfg.dt)
        assert traj.multipliers.shape == (cfg.n_steps + 1, 4)
        assert np.all(traj.multipliers[0] == 0.0)
        assert traj.states["frame"].shape == (cfg.n_steps + 1, 2 * 200)
        # accessors agree with the raw arrays
        assert np.array_equal(traj.displacement("frame", 3), traj.states["frame"][:, 3])
        assert np.array_equal(traj.velocity("frame", 3), traj.states["frame"][:, 203])

    def test_velocity_compatibility_annihilated(self, desk):
        cfg = SolverConfig(dt=1e-3, duration=0.1)
        times = np.arange(cfg.n_steps + 1) * cfg.dt
        traj = simulate(desk, cfg, {"suspension": wheel_forces(desk, "suspension", times)})
        frame = desk.substructures["frame"]
        susp = desk.substructures["suspension"]
        residual = np.zeros((cfg.n_steps + 1, 4))
        for c in range(4):
            v_frame = traj.velocity("frame", frame.boundary_dofs[c])
            v_susp = traj.velocity("suspension", susp.boundary_dofs[c])
            residual[:, c] = v_frame - v_susp
        scale = max(np.abs(traj.states["suspension"][:, 8:]).max(), 1e-30)
        assert np.abs(residual).max() <= 1e-10 * scale

    def test_compatible_free_solutions_need_no_multipliers(self):
        # two identical oscillators, identical forcing: free solutions already
        # compatible, so the interface force stays zero
        subs = {"a": sdof(k=2.0, c=0.1), "b": sdof(k=2.0, c=0.1)}
        topo = CouplingTopology(constraints=((("a", 0, 1), ("b", 0, -1)),))
        system = CoupledSystem(substructures=subs, topology=topo)
        cfg = SolverConfig(dt=0.01, duration=0.3)
        f = np.column_stack([np.sin(np.arange(cfg.n_steps + 1) * 0.1)])
        traj = simulate(system, cfg, {"a": f, "b": f})
        assert np.abs(traj.multipliers).max() <= 1e-12
        assert np.allclose(traj.states["a"], traj.states["b"], atol=1e-12)

    def test_divergence_detector(self):
        bad = LinearSubstructure(
            mass=[[1.0]], damping=[[0.0]], stiffness=[[-100.0]],
            internal_dofs=(), boundary_dofs=(0,),
        )
        system = CoupledSystem(substructures={"bad": bad}, topology=CouplingTopology(()))
        cfg = SolverConfig(dt=0.1, duration=50.0)
        with pytest.raises(DivergenceError) as err:
            simulate(system, cfg, initial={"bad": np.array([1.0, 0.0])})
        assert 0 < err.value.step <= cfg.n_steps
        assert "bad" in str(err.value)

    def test_divergence_limit_configurable(self):
        bad = LinearSubstructure(
            mass=[[1.0]], damping=[[0.0]], stiffness=[[-100.0]],
            internal_dofs=(), boundary_dofs=(0,),
        )
        system = CoupledSystem(substructures={"bad": bad}, topology=CouplingTopology(()))
        lenient = SolverConfig(dt=0.1, duration=1.0, divergence_limit=1e30)
        traj = simulate(system, lenient, initial={"bad": np.array([1.0, 0.0])})
        assert np.abs(traj.states["bad"]).max() < 1e30

    def test_input_table_shape_checked(self, desk):
        cfg = SolverConfig(dt=1e-3, duration=0.01)
        with pytest.raises(SolverError, match="columns"):
            simulate(desk, cfg, {"suspension": np.zeros((11, 3))})
        with pytest.raises(SolverError, match="rows"):
            simulate(desk, cfg, {"suspension": np.zeros((7, 8))})

    def test_thread_count_does_not_change_results(self, desk, monkeypatch):
        cfg = SolverConfig(dt=1e-3, duration=0.05)
        times = np.arange(cfg.n_steps + 1) * cfg.dt
        inputs = {"suspension": wheel_forces(desk, "suspension", times)}
        serial = simulate(desk, cfg, inputs)
        monkeypatch.setenv("DYNSUB_THREADS", "4")
        threaded = simulate(desk, cfg, inputs)
        for sid in desk.substructures:
            assert np.array_equal(serial.states[sid], threaded.states[sid])


class TestSubcycling:
    def _system(self):
        # small frame stand-in + nonlinear suspension pair
        frame = linear_suspension_analog(n_elements=2, wheel_mass=1.0, attach_mass=0.5, k1=200.0, c_visc=1.0)
        susp = suspension_substructure(n_elements=2)
        topo = CouplingTopology(constraints=(
            (("frame", 2, 1), ("suspension", 2, -1)),
            (("frame", 3, 1), ("suspension", 3, -1)),
        ))
        return CoupledSystem(substructures={"frame": frame, "suspension": susp},
                             physical=("suspension",), topology=topo)

    def _inputs(self, system, cfg, ss=1):
        n_fine = cfg.n_steps * ss + 1
        times = np.arange(n_fine) * (cfg.dt / ss)
        susp = system.substructures["suspension"]
        table = np.zeros((n_fine, susp.n_dofs))
        table[:, :2] = multisine_table(times, 2, freqs=(3.0, 7.0, 13.0), amps=(1.0, 1.0, 0.5))
        return {"suspension": table}

    def test_ss1_identical_to_plain_run(self):
        system = self._system()
        cfg = SolverConfig(dt=1e-3, duration=0.2, subcycles=1)
        inputs = self._inputs(system, cfg)
        via_inner_loop = simulate(system, cfg, inputs)
        # same factorizations, but force the single-free-step path
        plain = PartitionedSolver(system, cfg)
        plain.subcycled = set()
        ref = plain.run(inputs)
        for sid in system.substructures:
            assert np.abs(via_inner_loop.states[sid] - ref.states[sid]).max() <= 1e-12

    def test_fine_sampling_recorded(self):
        system = self._system()
        cfg = SolverConfig(dt=1e-3, duration=0.05, subcycles=5)
        traj = simulate(system, cfg, self._inputs(system, cfg, ss=5))
        assert "suspension" in traj.fine_states
        assert traj.fine_states["suspension"].shape[0] == cfg.n_steps * 5 + 1
        assert len(traj.fine_times["suspension"]) == cfg.n_steps * 5 + 1
        assert np.allclose(np.diff(traj.fine_times["suspension"]), cfg.dt / 5)
        # coupled states close each window
        assert np.allclose(traj.fine_states["suspension"][::5], traj.states["suspension"])
        # frame is not sub-cycled
        assert "frame" not in traj.fine_states

    def test_coarse_inputs_interpolated(self):
        system = self._system()
        cfg = SolverConfig(dt=1e-3, duration=0.05, subcycles=5)
        fine = simulate(system, cfg, self._inputs(system, cfg, ss=5))
        coarse_inputs = {"suspension": self._inputs(system, cfg, ss=5)["suspension"][::5]}
        interp = simulate(system, cfg, coarse_inputs)
        # interpolated forcing approximates the exact fine samples
        err = np.abs(fine.states["suspension"] - interp.states["suspension"]).max()
        scale = np.abs(fine.states["suspension"]).max()
        assert err <= 0.05 * scale

    def test_velocity_compatibility_holds_when_subcycled(self):
        system = self._system()
        cfg = SolverConfig(dt=1e-3, duration=0.1, subcycles=10)
        traj = simulate(system, cfg, self._inputs(system, cfg, ss=10))
        v_frame = np.column_stack([traj.velocity("frame", 2), traj.velocity("frame", 3)])
        v_susp = np.column_stack([traj.velocity("suspension", 2), traj.velocity("suspension", 3)])
        scale = max(np.abs(v_susp).max(), 1e-30)
        assert np.abs(v_frame - v_susp).max() <= 1e-10 * scale

    def test_ss10_similar_to_fine_step_run_with_some_loss(self):
        # 10 sub-cycles at dt vs a plain run at dt/10: close but not identical
        system = self._system()
        duration = 0.3
        cfg_ss = SolverConfig(dt=1e-3, duration=duration, subcycles=10)
        traj_ss = simulate(system, cfg_ss, self._inputs(system, cfg_ss, ss=10))
        cfg_fine = SolverConfig(dt=1e-4, duration=duration)
        traj_fine = simulate(system, cfg_fine, self._inputs(system, cfg_fine))
        wheel_ss = traj_ss.fine_states["suspension"][:, 0]
        wheel_fine = traj_fine.displacement("suspension", 0)
        assert wheel_ss.shape == wheel_fine.shape
        rel = np.mean((wheel_ss - wheel_fine) ** 2) / np.mean(wheel_fine**2)
        assert rel < 0.05       # overall response similar
        assert rel > 1e-8       # but a measurable fidelity loss remains
