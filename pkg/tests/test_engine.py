import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import run_transfer_experiment
from transferid import (
    GeometryGuardError,
    InformativityError,
    LinearModel,
    PerturbationSpec,
    StackedData,
    Subspace,
    Trajectory,
    TransferIdentifier,
    add,
    distance,
    extract_model,
    intersect,
    kernel,
    left_kernel,
    model_subspace,
    perturb,
    pe_inputs,
    principal_decomposition,
    random_model,
    simulate,
    simulate_autonomous,
    span,
    stack,
)

SCALAR_PRIOR = StackedData.from_snapshots(
    1, 1, np.array([[1.0, 0.0], [0.0, 1.0], [0.7, 0.7]])
)


def fit_scalar():
    return TransferIdentifier().fit(SCALAR_PRIOR)


class TestFit:
    def test_scalar_prior_model(self):
        est = fit_scalar()
        assert abs(est.similar_model_.A[0, 0] - 0.7) < 1e-9
        assert abs(est.similar_model_.B[0, 0] - 0.7) < 1e-9
        assert est.model_ is est.similar_model_
        assert est.remaining_rank_ == est.target_dim_ == 2

    def test_step_zero_subspace_is_prior(self):
        est = fit_scalar()
        assert distance(est.current_subspace(), est.prior_space_) < 1e-12

    def test_rank_deficient_prior_rejected(self):
        bad = StackedData.from_snapshots(
            1, 1, np.array([[1.0, 2.0], [0.0, 0.0], [0.7, 1.4]])
        )
        with pytest.raises(InformativityError, match="rank 1, need 2"):
            TransferIdentifier().fit(bad)

    def test_inconsistent_prior_rejected(self):
        # three snapshots that no single scalar model can produce
        bad = StackedData.from_snapshots(
            1, 1, np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.7, 0.7, 9.0]])
        )
        with pytest.raises(InformativityError, match="not consistent"):
            TransferIdentifier().fit(bad)

    def test_fit_recovers_generator(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n, m = 2 + seed % 3, 1 + seed % 2
            truth = random_model(n, m, seed=seed)
            u = pe_inputs(m, (m + 1) * (n + 1) + 4, n + 1, seed=seed)
            est = TransferIdentifier().fit(simulate(truth, rng.normal(size=n), u))
            assert est.similar_model_.gap(truth) < 1e-9

    def test_raw_matrix_needs_dims(self):
        with pytest.raises(ValueError, match="explicit n and m"):
            TransferIdentifier().fit(np.eye(3))

    def test_unfitted_access(self):
        est = TransferIdentifier()
        with pytest.raises(NotFittedError):
            est.push(np.ones(3))
        with pytest.raises(NotFittedError):
            est.predict(np.ones((1, 1)), np.ones((1, 1)))


class TestPush:
    def test_scalar_fusion(self):
        est = fit_scalar()
        report = est.push([1.0, 1.0, 1.0])
        assert abs(report.model.A[0, 0] - 0.5) < 1e-9
        assert abs(report.model.B[0, 0] - 0.5) < 1e-9
        assert report.remaining_rank == 1
        assert report.rank_increased and not report.complete
        assert report.model.provenance == "step-1"

    def test_scalar_fused_subspace(self):
        est = fit_scalar()
        est.push([1.0, 1.0, 1.0])
        current = est.current_subspace()
        expected = span(np.array([[1.0, 1.0], [1.0, -1.0], [1.0, 0.0]]))
        assert current.dim == 2
        assert np.linalg.norm(expected.basis - current.project(expected.basis)) < 1e-12

    def test_duplicate_direction_is_inert(self):
        ctx = run_transfer_experiment(seed=3, n=2, m=2)
        est = TransferIdentifier().fit(model_subspace(ctx.similar).basis, n=2, m=2)
        est.push(ctx.snapshots[0])
        before = est.model_
        report = est.push(1.7 * ctx.snapshots[0])
        assert not report.rank_increased
        assert report.model.gap(before) < 1e-9
        assert est.step_ == 2 and est.rank_ == 1

    def test_wrong_length_rejected(self):
        est = fit_scalar()
        with pytest.raises(ValueError, match="length 3"):
            est.push([1.0, 1.0])

    def test_push_after_completion_rejected(self):
        est = fit_scalar()
        est.push([1.0, 1.0, 1.0])
        est.push([1.0, 0.0, 0.6])
        assert est.complete_
        with pytest.raises(RuntimeError, match="complete"):
            est.push([0.0, 1.0, 0.4])

    def test_partial_orthogonality_guard(self):
        # prior whose data subspace shares an orthogonal direction with the
        # plant snapshot: the fused subspace would lose the needed dimension
        prior = StackedData.from_snapshots(
            1, 1, np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        )
        est = TransferIdentifier().fit(prior)
        with pytest.raises(GeometryGuardError, match="partially orthogonal"):
            est.push([1.0, 0.0, -1.0])

    def test_consistency_with_all_pushed_snapshots(self):
        for seed in (0, 1):
            ctx = run_transfer_experiment(seed=seed, n=3, m=2)
            for step, report in enumerate(ctx.reports, start=1):
                model = report.model
                for h in ctx.snapshots[:step]:
                    n = model.n
                    x, u, x_next = h[:n], h[n : n + model.m], h[n + model.m :]
                    assert np.linalg.norm(x_next - model.step(x, u)) < 1e-8


class TestExtractModel:
    def test_scalar_basis(self):
        H = np.array([[1.0, 1.0], [1.0, -1.0], [1.0, 0.0]])
        model = extract_model(H, 1, 1)
        assert abs(model.A[0, 0] - 0.5) < 1e-12
        assert abs(model.B[0, 0] - 0.5) < 1e-12

    def test_arbitrary_completion_misleads(self):
        # completing the data with a consistent but arbitrary prior snapshot
        # produces a wildly wrong model: closeness matters, not consistency
        H = np.array([[1.0, 1.09302], [1.0, 1.0], [1.0, 1.4651]])
        model = extract_model(H, 1, 1)
        assert abs(model.A[0, 0] - 5.0) < 1e-3
        assert abs(model.B[0, 0] + 4.0) < 1e-3

    def test_invariant_under_column_operations(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            truth = random_model(3, 2, seed=int(rng.integers(1 << 16)))
            H = model_subspace(truth).basis
            g = rng.normal(size=(5, 5))
            while abs(np.linalg.det(g)) < 1e-3:
                g = rng.normal(size=(5, 5))
            model = extract_model(H @ g, 3, 2)
            assert model.gap(truth) < 1e-9

    def test_rank_deficient_past_block_rejected(self):
        H = np.array([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]])
        with pytest.raises(InformativityError):
            extract_model(H, 1, 1)

    def test_residual_is_tiny(self):
        ctx = run_transfer_experiment(seed=11, n=3, m=1)
        for report, space in zip(ctx.reports, ctx.spaces):
            model = report.model
            lam = model.n + model.m
            H = space.basis
            residual = H[lam:] - model.theta @ H[:lam]
            assert np.linalg.norm(residual) < 1e-8 * max(1.0, np.linalg.norm(H[lam:]))

    def test_model_subspace_round_trip(self):
        truth = random_model(4, 2, seed=9)
        back = extract_model(model_subspace(truth).basis, 4, 2)
        assert back.gap(truth) < 1e-10


class TestTheorems:
    """Randomized checks of the geometric guarantees on fresh-direction runs."""

    CASES = [(0, 1, 1), (1, 2, 1), (2, 2, 2), (3, 3, 2), (4, 4, 3), (5, 1, 3)]

    @pytest.mark.parametrize("seed,n,m", CASES)
    def test_dimension_preservation(self, seed, n, m):
        ctx = run_transfer_experiment(seed=seed, n=n, m=m)
        assert all(space.dim == ctx.lam for space in ctx.spaces)

    @pytest.mark.parametrize("seed,n,m", CASES)
    def test_distance_equals_raw_data_distance(self, seed, n, m):
        ctx = run_transfer_experiment(seed=seed, n=n, m=m)
        prior = ctx.est.prior_space_
        for step, (report, space) in enumerate(zip(ctx.reports, ctx.spaces), start=1):
            plant_span = span(np.column_stack(ctx.snapshots[:step]))
            assert abs(report.d_to_similar - distance(prior, plant_span)) < 1e-9

    @pytest.mark.parametrize("seed,n,m", CASES)
    def test_distance_to_truth_equals_borrowed_part(self, seed, n, m):
        ctx = run_transfer_experiment(seed=seed, n=n, m=m)
        prior = ctx.est.prior_space_
        for step, space in enumerate(ctx.spaces[:-1], start=1):
            plant_span = span(np.column_stack(ctx.snapshots[:step]))
            borrowed = intersect(left_kernel(plant_span), prior)
            assert borrowed.dim >= 1
            lhs = distance(ctx.truth_space, space)
            rhs = distance(ctx.truth_space, borrowed)
            assert abs(lhs - rhs) < 1e-9

    @pytest.mark.parametrize("seed,n,m", CASES)
    def test_monotone_divergence_and_convergence(self, seed, n, m):
        ctx = run_transfer_experiment(seed=seed, n=n, m=m)
        d_similar = [r.d_to_similar for r in ctx.reports]
        d_truth = [distance(ctx.truth_space, s) for s in ctx.spaces]
        assert all(b >= a - 1e-9 for a, b in zip(d_similar, d_similar[1:]))
        assert all(b <= a + 1e-9 for a, b in zip(d_truth, d_truth[1:]))
        # strict moves on fresh steps with distinct subspaces
        assert all(b > a for a, b in zip(d_similar[:-1], d_similar[1:]))
        # never farther from the truth than the prior is
        d_prior_truth = distance(ctx.truth_space, ctx.est.prior_space_)
        assert all(d <= d_prior_truth + 1e-9 for d in d_truth)

    @pytest.mark.parametrize("seed,n,m", CASES[:4])
    def test_minimality_among_completions(self, seed, n, m):
        rng = np.random.default_rng(1000 + seed)
        ctx = run_transfer_experiment(seed=seed, n=n, m=m)
        prior = ctx.est.prior_space_
        M, lam = 2 * n + m, n + m
        for step, report in enumerate(ctx.reports, start=1):
            if report.complete:
                continue
            retained = np.column_stack(ctx.snapshots[:step])
            for _ in range(10):
                completion = span(
                    np.hstack([retained, rng.normal(size=(M, lam - step))])
                )
                if completion.dim != lam:
                    continue
                assert report.d_to_similar <= distance(prior, completion) + 1e-9

    @pytest.mark.parametrize("seed,n,m", CASES)
    def test_zero_angle_counts(self, seed, n, m):
        ctx = run_transfer_experiment(seed=seed, n=n, m=m)
        prior = ctx.est.prior_space_
        lam = ctx.lam
        for step, space in enumerate(ctx.spaces, start=1):
            angles_prior = principal_decomposition(prior, space).angles
            assert np.count_nonzero(angles_prior < 1e-8) >= lam - step
            angles_truth = principal_decomposition(ctx.truth_space, space).angles
            assert np.count_nonzero(angles_truth < 1e-8) >= step

    @pytest.mark.parametrize("seed,n,m", CASES)
    def test_completion_reaches_truth(self, seed, n, m):
        ctx = run_transfer_experiment(seed=seed, n=n, m=m)
        assert ctx.reports[-1].complete
        assert ctx.est.rank_ == ctx.lam
        assert distance(ctx.truth_space, ctx.spaces[-1]) < 1e-8
        assert ctx.est.model_.gap(ctx.truth) < 1e-6

    def test_absorption_of_prior_consistent_data(self):
        # snapshots generated by the prior system itself never move the
        # estimate away from the prior
        rng = np.random.default_rng(21)
        prior_model = random_model(3, 2, seed=2)
        traj = simulate(prior_model, rng.normal(size=3), rng.uniform(-1, 1, (2, 14)))
        est = TransferIdentifier().fit(stack(traj))
        extra = stack(simulate(prior_model, rng.normal(size=3), rng.uniform(-1, 1, (2, 5))))
        for k in range(extra.n_snapshots):
            report = est.push(extra.matrix[:, k])
            assert report.d_to_similar < 1e-9
            assert report.model.gap(prior_model) < 1e-8

    def test_early_exactness(self):
        # engineered plant subspace built from the prior and one snapshot
        # direction: the first fused subspace already equals the plant's, and
        # every later estimate stays there
        rng = np.random.default_rng(31)
        n, m = 3, 2
        prior_model = random_model(n, m, seed=5)
        prior_space = model_subspace(prior_model)
        h = rng.normal(size=2 * n + m)
        h_line = span(h[:, np.newaxis])
        truth_space = add(intersect(prior_space, left_kernel(h_line)), h_line)
        assert truth_space.dim == n + m
        truth = extract_model(truth_space.basis, n, m, provenance="truth")
        # h itself must be a valid plant snapshot for the construction
        assert truth_space.contains(h)
        x, u = h[:n], h[n : n + m]
        h = np.concatenate([x, u, truth.step(x, u)])

        est = TransferIdentifier().fit(prior_space.basis, n=n, m=m)
        est.push(h)
        d_prior_truth = distance(prior_space, truth_space)
        assert abs(est.history_[0].d_to_similar - d_prior_truth) < 1e-9
        assert distance(truth_space, est.current_subspace()) < 1e-9
        assert est.model_.gap(truth) < 1e-7
        plant = stack(simulate(truth, rng.normal(size=n), rng.uniform(-1, 1, (m, n + m))))
        for k in range(plant.n_snapshots):
            if est.complete_:
                break
            est.push(plant.matrix[:, k])
            assert distance(truth_space, est.current_subspace()) < 1e-8
            assert est.model_.gap(truth) < 1e-6


class TestAutonomous:
    def make_pair(self, seed=0, n=3, sigma=0.1):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(n, n))
        a *= 0.8 / np.abs(np.linalg.eigvals(a)).max()
        truth = LinearModel(a, np.zeros((n, 0)), provenance="truth")
        similar = perturb(truth, PerturbationSpec(sigma, "uniform", seed=seed + 1))
        return truth, similar

    def fit_prior(self, similar, seed=0, length=12):
        rng = np.random.default_rng(seed + 100)
        traj = simulate_autonomous(similar, rng.normal(size=similar.n), length)
        return TransferIdentifier().fit(traj)

    def test_step_zero_model_is_prior(self):
        truth, similar = self.make_pair()
        est = self.fit_prior(similar)
        assert est.m_ == 0 and est.target_dim_ == 3
        assert est.model_.gap(similar) < 1e-9

    def test_exact_after_n_fresh_snapshots(self):
        truth, similar = self.make_pair(seed=4)
        est = self.fit_prior(similar, seed=4)
        rng = np.random.default_rng(7)
        pushed = 0
        while not est.complete_:
            x = rng.normal(size=3)
            est.push(np.concatenate([x, truth.step(x)]))
            pushed += 1
        assert pushed == 3
        assert est.model_.gap(truth) < 1e-9
        assert est.model_.B.shape == (3, 0)

    def test_duplicate_snapshot_inert(self):
        truth, similar = self.make_pair(seed=8)
        est = self.fit_prior(similar, seed=8)
        x = np.ones(3)
        est.push(np.concatenate([x, truth.step(x)]))
        before = est.model_
        report = est.push(np.concatenate([2 * x, truth.step(2 * x)]))
        assert not report.rank_increased
        assert report.model.gap(before) < 1e-9

    def test_driven_snapshot_length_rejected(self):
        truth, similar = self.make_pair()
        est = self.fit_prior(similar)
        with pytest.raises(ValueError, match="length 6"):
            est.push(np.ones(7))


class TestSklearnSurface:
    def test_get_params_and_clone(self):
        est = TransferIdentifier(rank_tolerance=1e-8)
        assert est.get_params() == {"rank_tolerance": 1e-8}
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_set_params(self):
        est = TransferIdentifier().set_params(rank_tolerance=1e-6)
        assert est.rank_tolerance == 1e-6

    def test_partial_fit_batches(self):
        est = fit_scalar()
        out = est.partial_fit(np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 0.6]]))
        assert out is est
        assert est.complete_ and est.step_ == 2

    def test_partial_fit_stacked_data(self):
        est = fit_scalar()
        est.partial_fit(StackedData.from_snapshots(1, 1, np.array([[1.0], [1.0], [1.0]])))
        assert est.step_ == 1

    def test_predict_matches_recursion(self):
        ctx = run_transfer_experiment(seed=13, n=3, m=2)
        est = ctx.est
        rng = np.random.default_rng(0)
        X = rng.normal(size=(6, 3))
        U = rng.normal(size=(6, 2))
        got = est.predict(X, U)
        want = X @ est.model_.A.T + U @ est.model_.B.T
        np.testing.assert_allclose(got, want, atol=1e-12)
        # completed run: predictions follow the true plant
        np.testing.assert_allclose(got, X @ ctx.truth.A.T + U @ ctx.truth.B.T, atol=1e-6)

    def test_predict_shape_checks(self):
        est = fit_scalar()
        with pytest.raises(ValueError, match="U is required"):
            est.predict(np.ones((2, 1)))


class TestStepReports:
    def test_history_matches_returned_reports(self):
        ctx = run_transfer_experiment(seed=17, n=2, m=2)
        assert ctx.est.history_ == ctx.reports
        steps = [r.step for r in ctx.reports]
        assert steps == list(range(1, len(steps) + 1))
        assert [r.complete for r in ctx.reports] == [False] * (len(steps) - 1) + [True]
        assert ctx.reports[-1].remaining_rank == 0

    def test_duplicates_logged_but_not_counted(self):
        ctx = run_transfer_experiment(seed=19, n=2, m=1, duplicate_every=2)
        assert any(ctx.duplicates)
        for dup, report in zip(ctx.duplicates, ctx.reports):
            assert report.rank_increased == (not dup)
        assert ctx.est.step_ == len(ctx.snapshots) > ctx.est.rank_ == ctx.lam
