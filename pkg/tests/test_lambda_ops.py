import numpy as np
import pytest

from parh.errors import NotPrimitiveError, ShortcutInvalidError
from parh.grids import GridDomain, compact_laplacian, connection_form, herm_exp, herm_log
from parh.lambda_ops import (
    ConnectionField,
    HiggsPair,
    MetricField,
    decompose_operators,
    g_tensor,
    hitchin_residual,
    kobayashi_lubke_pointwise,
    lambda_flat_from_higgs,
    pluriharmonic_test,
    refinement_ratio,
)
from parh.models import rank2_model_metric


def annulus(n, rmin=0.2, rmax=0.8):
    return GridDomain("annulus", (n, n), r_min=rmin, r_max=rmax)


def torus(n):
    return GridDomain("torus", (n, n), periods=(1.0, 1.0))


def eye_field(grid, r):
    return np.broadcast_to(np.eye(r, dtype=complex), grid.shape + (r, r)).copy()


def zero_conn(grid, lam, r):
    z = np.zeros(grid.shape + (r, r), dtype=complex)
    return ConnectionField(grid, lam, z, z.copy())


class TestLogTransport:
    def test_log_exp_round_trip(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(5, 5, 2, 2)) + 1j * rng.normal(size=(5, 5, 2, 2))
        H = A @ np.conj(np.swapaxes(A, -1, -2)) + 2 * np.eye(2)
        assert np.allclose(herm_exp(herm_log(H)), H, atol=1e-12)

    def test_connection_form_consistency(self):
        # transported log-derivative agrees with H^-1 dH at second order
        errs = []
        for n in (32, 64):
            g = annulus(n)
            s = g.w.real
            p = g.w.imag
            H = np.zeros(g.shape + (2, 2), complex)
            H[..., 0, 0] = np.exp(0.3 * np.sin(s) * np.cos(p)) + 0.5
            H[..., 1, 1] = np.exp(0.2 * np.cos(2 * p) * np.sin(1.3 * s)) + 0.5
            c = 0.1 * np.sin(s + p) * (0.3 + 0.15j)
            H[..., 0, 1] = c
            H[..., 1, 0] = np.conj(c)
            W = herm_log(H)
            F = connection_form(g, W)
            ref = np.linalg.inv(H) @ g.d_w(H)
            errs.append(np.abs(F - ref)[g.interior].max())
        assert errs[0] / errs[1] > 3.0
        assert errs[1] < 1e-2


class TestDecompose:
    def test_lambda_zero_reduces_to_higgs(self):
        g = annulus(16)
        model = rank2_model_metric(0.0, g)
        D = ConnectionField(g, 0j, np.zeros_like(model.theta), model.theta)
        ops = decompose_operators(D, model.metric)
        assert np.allclose(ops.T10, model.theta)
        assert np.abs(ops.P01).max() < 1e-14

    def test_rank1_trivial_all_zero(self):
        g = torus(16)
        h = MetricField(g, eye_field(g, 1))
        D = zero_conn(g, 0j, 1)
        ops = decompose_operators(D, h)
        for M in (ops.C10, ops.B01, ops.P01, ops.P10, ops.T10, ops.T01):
            assert np.abs(M).max() < 1e-14

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(1)
        g = torus(16)
        r = 2
        H = eye_field(g, r)
        H[..., 0, 0] += 0.3
        h = MetricField(g, H)
        for lam in (0j, 1j, 0.7 - 0.2j):
            A01 = rng.normal(size=g.shape + (r, r)) + 1j * rng.normal(size=g.shape + (r, r))
            A10 = rng.normal(size=g.shape + (r, r)) + 1j * rng.normal(size=g.shape + (r, r))
            D = ConnectionField(g, lam, A01, A10)
            ops = decompose_operators(D, h)
            assert ops.reconstruction_error(D) < 1e-12


class TestGTensor:
    def test_rank1_matches_scaled_curvature(self):
        # G(h) == (1 + |lam|^2) R(h) in rank one
        g = torus(48)
        x, y = g.w.real, g.w.imag
        q = 0.2 * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
        h = MetricField(g, np.exp(q)[..., None, None].astype(complex))
        R = -0.25 * compact_laplacian(g, q)
        for lam in (0j, 1.0 + 0j, 0.3 + 0.4j):
            D = zero_conn(g, lam, 1)
            G = g_tensor(D, h)
            got = G.g11[..., 0, 0].real
            assert np.abs(got - (1 + abs(lam) ** 2) * R).max() < 1e-10

    def test_model_is_pluriharmonic_to_stencil_order(self):
        sups = []
        for n in (32, 64):
            g = annulus(n)
            model = rank2_model_metric(0.1, g)
            D = ConnectionField(g, 0j, np.zeros_like(model.theta), model.theta)
            G = g_tensor(D, model.metric)
            sups.append(G.sup_norms()[0])
        assert sups[1] < sups[0]
        assert sups[1] < 0.05

    def test_scale_invariance_exact(self):
        g = annulus(24)
        model = rank2_model_metric(0.0, g)
        D = ConnectionField(g, 0j, np.zeros_like(model.theta), model.theta)
        G1 = g_tensor(D, model.metric)
        G2 = g_tensor(D, model.metric.scaled(3.7))
        assert np.abs(G1.g11 - G2.g11).max() < 1e-12

    def test_self_adjointness_by_construction(self):
        g = annulus(24)
        model = rank2_model_metric(0.3, g)
        lf = lambda_flat_from_higgs(model.higgs, model.metric, 1.0 + 0j)
        G = g_tensor(lf.connection, model.metric)
        H = model.metric.data
        Gadj = np.linalg.inv(H) @ np.conj(np.swapaxes(G.g11, -1, -2)) @ H
        assert np.abs(G.g11 - Gadj).max() < 1e-10

    def test_operator_squares_vanish_on_curves(self):
        # lambdabar^-1 d^2 + lambda^-1 theta^2 is a (2,0)-form: identically
        # zero in one complex dimension, reported as structural zeros
        g = annulus(24)
        model = rank2_model_metric(0.1, g)
        lf = lambda_flat_from_higgs(model.higgs, model.metric, 1.0 + 0j)
        G = g_tensor(lf.connection, model.metric)
        assert np.abs(G.g20).max() == 0.0
        assert np.abs(G.g02).max() == 0.0


class TestPluriharmonic:
    def test_lambda_one_model_true(self):
        g = annulus(64)
        model = rank2_model_metric(0.1, g)
        lf = lambda_flat_from_higgs(model.higgs, model.metric, 1.0 + 0j)
        rep = pluriharmonic_test(lf.connection, model.metric)
        assert rep.shortcut_used
        assert rep.is_pluriharmonic

    def test_perturbed_metric_false(self):
        g = annulus(64)
        model = rank2_model_metric(0.1, g)
        s = g.w.real
        factor = np.exp(0.1 * np.sin(3 * s))
        h_bad = MetricField(g, model.metric.data * factor[..., None, None])
        lf = lambda_flat_from_higgs(model.higgs, model.metric, 1.0 + 0j)
        rep = pluriharmonic_test(lf.connection, h_bad)
        assert not rep.is_pluriharmonic

    def test_rank1_flat_any_lambda(self):
        g = torus(16)
        h = MetricField(g, eye_field(g, 1))
        for lam in (0.5 + 0j, 1j):
            rep = pluriharmonic_test(zero_conn(g, lam, 1), h)
            assert rep.is_pluriharmonic

    def test_shortcut_invalid_at_lambda_zero(self):
        g = torus(16)
        h = MetricField(g, eye_field(g, 1))
        with pytest.raises(ShortcutInvalidError):
            pluriharmonic_test(zero_conn(g, 0j, 1), h, use_shortcut=True)


class TestHitchinResidual:
    def test_model_refinement(self):
        res = {}
        for n in (64, 128):
            g = annulus(n)
            model = rank2_model_metric(0.1, g)
            res[n] = hitchin_residual(model.higgs, model.metric)
        ratio = refinement_ratio(res[64], res[128])
        assert 3.5 < ratio < 4.5
        assert res[128].sup < 1e-2

    def test_flat_zero(self):
        g = torus(16)
        h = MetricField(g, eye_field(g, 1))
        higgs = HiggsPair(g, np.zeros(g.shape + (1, 1), complex), np.zeros(g.shape + (1, 1), complex))
        assert hitchin_residual(higgs, h).sup < 1e-14

    def test_conformal_factor_matches_stencil(self):
        # theta = 0, h = e^phi flat: residual equals the dbar d phi stencil
        g = torus(32)
        x, y = g.w.real, g.w.imag
        phi = 0.3 * np.sin(2 * np.pi * x) + 0.1 * np.cos(2 * np.pi * y)
        h = MetricField(g, np.exp(phi)[..., None, None].astype(complex))
        higgs = HiggsPair(g, np.zeros(g.shape + (1, 1), complex), np.zeros(g.shape + (1, 1), complex))
        res = hitchin_residual(higgs, h)
        expected = -0.25 * compact_laplacian(g, phi)
        assert np.abs(res.field[..., 0, 0].real - expected).max() < 1e-12

    def test_model_bracket_closed_form(self):
        # [theta, theta+] = diag(-1, 1) L^-2 in the log chart
        g = annulus(24)
        model = rank2_model_metric(0.3, g)
        H = model.metric.data
        Th = model.theta
        Thd = np.linalg.inv(H) @ np.conj(np.swapaxes(Th, -1, -2)) @ H
        br = Th @ Thd - Thd @ Th
        L = H[..., 0, 0].real
        assert np.allclose(br[..., 0, 0], -1.0 / L**2, atol=1e-12)
        assert np.allclose(br[..., 1, 1], 1.0 / L**2, atol=1e-12)
        assert np.abs(br[..., 0, 1]).max() < 1e-14


class TestLambdaFlatFromHiggs:
    def test_lambda_zero_identity(self):
        g = annulus(24)
        model = rank2_model_metric(0.0, g)
        lf = lambda_flat_from_higgs(model.higgs, model.metric, 0j)
        assert np.allclose(lf.connection.A10, model.theta)
        assert np.abs(lf.connection.A01).max() < 1e-14
        assert not lf.warning

    def test_lambda_one_flatness_second_order(self):
        from parh.lambda_ops import ResidualField

        fields = {}
        for n in (32, 64):
            g = annulus(n)
            model = rank2_model_metric(0.1, g)
            lf = lambda_flat_from_higgs(model.higgs, model.metric, 1.0 + 0j)
            fields[n] = ResidualField(g, lf.connection.flatness_residual())
        assert 3.0 < refinement_ratio(fields[32], fields[64]) < 5.5

    def test_rank1_coefficient_closed_form(self):
        # theta = alpha dz/z, h = |z|^(-2a): (1,0)-coefficient (lam(-a) + alpha) dz/z
        g = annulus(24)
        a, alpha, lam = 0.3, 0.25 + 0.1j, 0.8 + 0.2j
        s = g.w.real
        h = MetricField(g, np.exp(-2 * a * s)[..., None, None].astype(complex))
        theta = np.full(g.shape + (1, 1), alpha, dtype=complex)
        higgs = HiggsPair(g, np.zeros_like(theta), theta)
        lf = lambda_flat_from_higgs(higgs, h, lam)
        expected = lam * (-a) + alpha
        assert np.abs(lf.connection.A10[g.interior] - expected).max() < 1e-10


class TestKobayashiLubke:
    @staticmethod
    def structured_samples(rng, n, r):
        G = np.zeros((n, n, 2, 2, r, r), complex)
        K = rng.normal(size=(n, n, r, r)) + 1j * rng.normal(size=(n, n, r, r))
        K = 0.5 * (K + np.conj(np.swapaxes(K, -1, -2)))
        K -= (np.trace(K, axis1=-2, axis2=-1) / r)[..., None, None] * np.eye(r)
        C = rng.normal(size=(n, n, r, r)) + 1j * rng.normal(size=(n, n, r, r))
        C -= (np.trace(C, axis1=-2, axis2=-1) / r)[..., None, None] * np.eye(r)
        G[:, :, 0, 0] = 1j * K
        G[:, :, 1, 1] = -1j * K
        G[:, :, 0, 1] = C
        G[:, :, 1, 0] = -np.conj(np.swapaxes(C, -1, -2))
        return G

    def test_zero_input(self):
        grid = GridDomain("torus", (10, 10), complex_dim=2)
        G = np.zeros((10, 10, 2, 2, 2, 2), complex)
        rep = kobayashi_lubke_pointwise(G, grid)
        assert np.abs(rep.lhs_field).max() == 0.0

    def test_structured_ratio_constant(self):
        grid = GridDomain("torus", (10, 10), complex_dim=2)
        rng = np.random.default_rng(5)
        G = self.structured_samples(rng, 10, 2)
        rep = kobayashi_lubke_pointwise(G, grid)
        ratios = rep.ratio_field.ravel()
        assert np.allclose(ratios, ratios[0], rtol=1e-12)
        assert ratios[0] > 0

    def test_diagonal_tensor_sample(self):
        # diag(1,-1) tensor a fixed primitive (1,1)-form: constant ratio
        grid = GridDomain("torus", (8, 8), complex_dim=2)
        G = np.zeros((8, 8, 2, 2, 2, 2), complex)
        sigma = np.diag([1.0, -1.0]).astype(complex)
        G[:, :, 0, 0] = 1j * sigma
        G[:, :, 1, 1] = -1j * sigma
        rep = kobayashi_lubke_pointwise(G, grid)
        ratios = rep.ratio_field.ravel()
        assert np.allclose(ratios, ratios[0], rtol=1e-12)

    def test_non_primitive_rejected(self):
        grid = GridDomain("torus", (8, 8), complex_dim=2)
        G = np.zeros((8, 8, 2, 2, 2, 2), complex)
        G[:, :, 0, 0] = np.eye(2) * 1j
        G[:, :, 1, 1] = np.eye(2) * 1j  # trace does not cancel
        with pytest.raises(NotPrimitiveError):
            kobayashi_lubke_pointwise(G, grid)
