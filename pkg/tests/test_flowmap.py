import numpy as np
import pytest

from lagrangeflow.errors import AnchorDrift, MonotonicityLoss, OutOfRange
from lagrangeflow.eulerian import solve
from lagrangeflow.flowmap import (FlowMap, correspondence_error, extend_reference_mesh, invert,
                                  lagrangian_density, mixed_partial_residual, reconstruct)
from lagrangeflow.grid import CONSTANT, PERIODIC, GridFunction, uniform_grid
from lagrangeflow.numerics import observed_order
from lagrangeflow.oracles import characteristics_density, particle_paths
from lagrangeflow.temple import TempleTrajectory, init_temple, solve_temple

SINE = lambda x: 2 + 0.5 * np.sin(2 * np.pi * x)


def riemann_run(vel, spec, n, left, right, T=0.5, domain=(-0.5, 1.5)):
    rho0 = uniform_grid(n, domain, lambda x: np.where(x < 0, left, right), CONSTANT)
    ref = extend_reference_mesh(rho0, float(np.max(vel.F(np.array(spec.data_range)))), T)
    traj = solve_temple(init_temple(vel, ref), T)
    return rho0, traj, reconstruct(traj)


class TestReconstruct:
    def test_constant_data_translates(self, burgers):
        _, vel = burgers
        rho0 = uniform_grid(50, (0, 1), lambda x: 1.5 + 0 * x, CONSTANT)
        traj = solve_temple(init_temple(vel, rho0), 0.4, output_times=[0.1, 0.2])
        for fmap in reconstruct(traj):
            assert np.allclose(fmap.gamma, fmap.x + vel.F(1.5) * fmap.t, rtol=0, atol=1e-14)

    def test_identity_at_start(self, burgers):
        _, vel = burgers
        traj = solve_temple(init_temple(vel, uniform_grid(40, (0, 1), SINE)), 0.1)
        fmap = reconstruct(traj)[0]
        assert fmap.t == 0.0
        assert np.allclose(fmap.gamma, fmap.x, rtol=0, atol=1e-15)

    def test_periodic_degree_one(self, burgers):
        _, vel = burgers
        traj = solve_temple(init_temple(vel, uniform_grid(64, (0, 1), SINE)), 0.15)
        for fmap in reconstruct(traj):
            assert fmap.gamma[-1] - fmap.gamma[0] == pytest.approx(1.0, abs=1e-13)
            assert fmap(fmap.x[3] + 1.0) == pytest.approx(fmap.gamma[3] + 1.0, abs=1e-13)

    def test_matches_particle_paths(self, burgers):
        spec, vel = burgers
        T = 0.5 / np.pi

        def velocity(y, t):
            return vel.F(characteristics_density(spec.speed, SINE, y, t))

        errors = []
        for n in (100, 200, 400):
            traj = solve_temple(init_temple(vel, uniform_grid(n, (0, 1), SINE)), T)
            fmap = reconstruct(traj)[-1]
            idx = np.arange(0, n + 1, n // 20)
            ref = particle_paths(velocity, fmap.x[idx], [0.0, T])[-1]
            errors.append(np.max(np.abs(fmap.gamma[idx] - ref)))
        for n, e in zip((100, 200, 400), errors):
            assert e <= 1.0 / n
        assert np.all(observed_order(errors) > 0.8)

    def test_mixed_partials_first_order(self, burgers):
        _, vel = burgers
        T = 0.5 / np.pi
        res = []
        for n in (100, 200, 400):
            traj = solve_temple(init_temple(vel, uniform_grid(n, (0, 1), SINE)), T,
                                output_times=list(np.linspace(0, T, n // 5 + 1)))
            res.append(mixed_partial_residual(traj))
        assert np.all(observed_order(res) >= 0.8)

    def test_anchor_drift(self, burgers):
        _, vel = burgers
        rho0 = uniform_grid(20, (0, 1), lambda x: 2 + 0 * x, CONSTANT)
        s0 = init_temple(vel, rho0)
        s1 = type(s0)(s0.eta.with_values(np.r_[1.1, np.ones(19)]), s0.v, vel)
        traj = TempleTrajectory([s0, s1], np.array([0.0, 0.1]), 0.45,
                                anchor_times=[0.0, 0.1], anchor_velocity=[1.0, 1.0])
        with pytest.raises(AnchorDrift):
            reconstruct(traj)


class TestInvert:
    def test_identity_and_translation(self):
        x = np.linspace(0, 1, 11)
        ident = FlowMap(x, x.copy(), 0.0)
        assert invert(ident, 0.37) == pytest.approx(0.37, abs=1e-15)
        shifted = FlowMap(x, x + 0.25, 0.0)
        assert invert(shifted, 0.6) == pytest.approx(0.35, abs=1e-15)

    def test_random_monotone_map(self, rng):
        x = np.linspace(0, 1, 100)
        gamma = np.concatenate(([0.0], np.cumsum(rng.uniform(0.1, 2.0, 99))))
        fmap = FlowMap(x, gamma, 0.0)
        y = rng.uniform(gamma[0], gamma[-1], 1000)
        assert np.max(np.abs(fmap(invert(fmap, y)) - y)) <= 1e-12 * (gamma[-1] - gamma[0])

    def test_out_of_range(self):
        x = np.linspace(0, 1, 5)
        with pytest.raises(OutOfRange):
            invert(FlowMap(x, x, 0.0), 1.5)

    def test_periodic_reduction(self, rng):
        x = np.linspace(0, 1, 51)
        gamma = 0.3 + x + 0.05 * np.sin(2 * np.pi * x)
        fmap = FlowMap(x, gamma, 0.0, PERIODIC)
        y = rng.uniform(-3, 3, 500)
        assert np.max(np.abs(fmap(invert(fmap, y)) - y)) <= 1e-12

    def test_folding_rejected(self):
        x = np.linspace(0, 1, 5)
        with pytest.raises(MonotonicityLoss):
            FlowMap(x, np.array([0, 0.3, 0.2, 0.6, 1.0]), 0.0)


class TestDensityRecovery:
    def test_constant_density(self, burgers):
        _, vel = burgers
        traj = solve_temple(init_temple(vel, uniform_grid(30, (0, 1), lambda x: 1.2 + 0 * x)), 0.3)
        fmap = reconstruct(traj)[-1]
        assert np.allclose(lagrangian_density(traj.states[-1], fmap, np.linspace(0, 1, 17)), 1.2)

    def test_initial_density(self, burgers):
        _, vel = burgers
        rho0 = uniform_grid(30, (0, 1), SINE)
        traj = solve_temple(init_temple(vel, rho0), 0.1)
        y = rho0.centers
        assert np.array_equal(lagrangian_density(traj.states[0], reconstruct(traj)[0], y), rho0.values)

    def test_shock_position(self, burgers):
        spec, vel = burgers
        n = 800
        rho0, traj, maps = riemann_run(vel, spec, n, 2.0, 1.0)
        y = rho0.centers
        lag = lagrangian_density(traj.states[-1], maps[-1], y)
        i = np.nonzero((lag[:-1] - 1.5) * (lag[1:] - 1.5) <= 0)[0][0]
        pos = y[i] + (y[i + 1] - y[i]) * (lag[i] - 1.5) / (lag[i] - lag[i + 1])
        assert abs(pos - 0.75) <= 2 * rho0.dx

    def test_correspondence_identical_fields(self, burgers):
        _, vel = burgers
        rho0 = uniform_grid(30, (0, 1), SINE)
        traj = solve_temple(init_temple(vel, rho0), 0.1)
        assert correspondence_error(rho0, traj.states[0], reconstruct(traj)[0]) == 0.0

    def test_correspondence_shock(self, burgers):
        spec, vel = burgers
        errors = []
        for n in (400, 800):
            rho0, traj, maps = riemann_run(vel, spec, n, 2.0, 1.0)
            eul = solve(spec, rho0, 0.5).snapshots[-1]
            errors.append(correspondence_error(eul, traj.states[-1], maps[-1]))
        assert errors[0] <= 0.05
        assert errors[0] / errors[1] >= 1.5

    def test_extended_mesh_covers_window(self, burgers):
        spec, vel = burgers
        rho0, traj, maps = riemann_run(vel, spec, 200, 1.0, 2.0)
        assert maps[-1].gamma[0] <= rho0.x0
        assert maps[-1].gamma[-1] >= rho0.edges[-1]
        assert extend_reference_mesh(uniform_grid(10, (0, 1), SINE, PERIODIC), 5.0, 1.0).n == 10
