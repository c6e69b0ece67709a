import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advnet.attacks import (
    AttackKind,
    AttackSpec,
    ClassProfile,
    Knowledge,
    Phase,
    Specificity,
    UnsupportedAttack,
    bim,
    budget_violations,
    build_profile,
    class_profile,
    craft_examples,
    craft_mi_l1,
    fgsm,
    fit_to_budget,
    jsma,
    mi_scores_array,
    plugin_mi,
    read_examples,
    rescore,
    select_discriminant,
    write_examples,
)
from advnet.dataset import Dataset
from advnet.models import MlpModel, TrainConfig, init_mlp, train_mlp, train_svm_rbf
from advnet.models.mlp import cross_entropy
from synthetic import blobs


def make_dataset(X, y, n_classes=None):
    n_classes = n_classes or int(y.max()) + 1
    return Dataset(np.asarray(X, dtype=float), np.asarray(y, dtype=np.int64),
                   tuple(f"f{i}" for i in range(X.shape[1])), tuple(f"c{i}" for i in range(n_classes)))


@pytest.fixture(scope="module")
def toy_mlp():
    X, y = blobs(60, [[0.3, 0.3, 0.5, 0.5], [0.7, 0.7, 0.5, 0.5], [0.5, 0.5, 0.2, 0.8]], 0.1, seed=7)
    model = train_mlp(X, y, 3, TrainConfig(epochs=60, hidden=(16, 16), learning_rate=0.05, seed=1))
    return model, make_dataset(X, y)


class TestMutualInformation:
    def test_feature_equal_to_label(self):
        y = np.array([0, 1] * 50)
        assert mi_scores_array(y[:, None].astype(float), y)[0] == pytest.approx(1.0, abs=1e-12)

    def test_independent_feature(self):
        rng = np.random.default_rng(0)
        X = rng.random((10_000, 1))
        y = rng.integers(0, 2, 10_000)
        assert mi_scores_array(X, y)[0] < 0.05

    def test_hand_joint(self):
        p = np.array([[0.4, 0.1], [0.1, 0.4]])
        expected = sum(p[i, j] * np.log2(p[i, j] / 0.25) for i in range(2) for j in range(2))
        assert plugin_mi(p * 1000) == pytest.approx(expected, abs=1e-12)
        assert plugin_mi(p) == pytest.approx(0.2781, abs=1e-4)

    def test_class_restriction(self):
        X = np.array([[0.1], [0.1], [0.9], [0.9]])
        y = np.array([0, 2, 1, 2])
        # over {0, 1} the feature determines the label exactly
        assert mi_scores_array(X, y, classes=(0, 1))[0] == pytest.approx(1.0)

    def test_top_value_lands_in_last_bin(self):
        X = np.array([[0.95], [1.0], [0.05], [0.0]])
        y = np.array([1, 1, 0, 0])
        assert mi_scores_array(X, y)[0] == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mi_scores_array(np.zeros((0, 2)), np.zeros(0))


class TestSelection:
    def test_top_two(self):
        assert select_discriminant(np.array([0.1, 0.9, 0.5]), 2).tolist() == [1, 2]

    def test_zero(self):
        assert select_discriminant(np.array([0.1, 0.9]), 0).tolist() == []

    def test_tie_goes_to_lower_index(self):
        assert select_discriminant(np.array([0.5, 0.5]), 1).tolist() == [0]

    def test_k_above_d(self):
        with pytest.raises(ValueError):
            select_discriminant(np.array([0.5]), 2)

    def test_single_sample_profile(self):
        ds = make_dataset(np.array([[0.1, 0.2, 0.3], [0.7, 0.8, 0.9]]), np.array([0, 1]))
        prof = class_profile(ds, 1, np.array([2, 0]))
        assert prof.values.tolist() == [0.9, 0.7]

    def test_even_count_median(self):
        ds = make_dataset(np.array([[0.0], [1.0], [0.0], [1.0]]), np.array([0, 0, 0, 0]), 1)
        assert class_profile(ds, 0, np.array([0])).values[0] == 0.5

    def test_symmetric_distribution(self):
        ds = make_dataset(np.array([[0.1], [0.2], [0.3], [0.4], [0.5]]), np.zeros(5, dtype=int), 1)
        assert class_profile(ds, 0, np.array([0])).values[0] == pytest.approx(0.3)

    def test_empty_class(self):
        ds = make_dataset(np.array([[0.1]]), np.array([0]), 2)
        with pytest.raises(ValueError):
            class_profile(ds, 1, np.array([0]))


class ConstantModel:
    def __init__(self, label):
        self.label = label

    def predict(self, X):
        X = np.asarray(X)
        return self.label if X.ndim == 1 else np.full(len(X), self.label)


class ThresholdModel:
    """Class 1 once feature ``j`` reaches ``t``, else class 0."""

    def __init__(self, j, t):
        self.j, self.t = j, t

    def predict(self, X):
        X = np.asarray(X)
        out = (X[..., self.j] >= self.t).astype(int)
        return int(out) if X.ndim == 1 else out


MI_SPEC = AttackSpec(AttackKind.MI_L1, epsilon=0.05, max_features=2, target_class=1)


class TestMiL1:
    def test_already_target(self):
        x = np.array([0.2, 0.4, 0.6])
        prof = ClassProfile(np.array([0, 1]), np.array([0.9, 0.9]), (1,))
        ex = craft_mi_l1(x, 0, prof, MI_SPEC, ConstantModel(1))
        assert ex.succeeded and not ex.delta.any() and ex.support.size == 0

    @pytest.mark.parametrize("label", [0, 1])
    def test_profile_equal_to_x(self, label):
        x = np.array([0.2, 0.4, 0.6])
        prof = ClassProfile(np.array([1, 2]), x[[1, 2]].copy(), (1,))
        ex = craft_mi_l1(x, 0, prof, MI_SPEC, ConstantModel(label))
        assert not ex.delta.any()
        assert ex.succeeded == (label == 1)

    def test_clamp_and_early_stop(self):
        x = np.array([0.5, 0.5, 0.5])
        prof = ClassProfile(np.array([2, 0]), np.array([0.51, 0.9]), (1,))
        ex = craft_mi_l1(x, 0, prof, MI_SPEC, ThresholdModel(2, 0.505))
        assert ex.succeeded
        assert ex.support.tolist() == [2]
        assert ex.perturbed[2] == pytest.approx(0.51)

    def test_step_limited_by_epsilon(self):
        x = np.array([0.5, 0.5])
        prof = ClassProfile(np.array([0, 1]), np.array([0.9, 0.1]), (1,))
        ex = craft_mi_l1(x, 0, prof, MI_SPEC, ConstantModel(0))
        assert not ex.succeeded
        np.testing.assert_allclose(ex.delta, [0.05, -0.05])
        assert budget_violations(ex, MI_SPEC) == []

    def test_grid_search_oracle(self):
        rng = np.random.default_rng(0)
        n = 200
        X = np.column_stack([
            np.concatenate([0.29 + 0.003 * rng.standard_normal(n), 0.31 + 0.003 * rng.standard_normal(n)]),
            0.5 + 0.003 * rng.standard_normal(2 * n),
        ])
        y = np.repeat([0, 1], n)
        train = make_dataset(X, y)
        model = train_svm_rbf(X, y, 2, TrainConfig(C=10.0, gamma=2000.0))
        spec = AttackSpec(AttackKind.MI_L1, epsilon=0.05, max_features=1, target_class=1)
        prof = build_profile(train, 0, spec)
        assert prof.feature_indices.tolist() == [0]
        x = np.array([0.29, 0.5])
        assert model.predict(x) == 0
        ex = craft_mi_l1(x, 0, prof, spec, model)
        assert ex.succeeded

        # best successful point in the box: closest to the profile on the
        # selected feature, smallest move elsewhere
        grid = np.round(np.arange(-0.05, 0.05 + 5e-4, 1e-3), 6)
        best, best_cost = None, np.inf
        for d0, d1 in itertools.product(grid, grid):
            cand = x + np.array([d0, d1])
            cost = abs(cand[0] - prof.values[0]) + abs(d1)
            if cost < best_cost - 1e-12 and model.predict(cand) == 1:
                best, best_cost = np.array([d0, d1]), cost
        np.testing.assert_allclose(ex.delta, best, atol=1e-3)

    def test_monotone_distance_to_profile(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.random(6)
            idx = rng.permutation(6)[:4]
            prof = ClassProfile(idx, rng.random(4), (1,))
            spec = AttackSpec(AttackKind.MI_L1, epsilon=float(rng.uniform(0.01, 0.3)), max_features=4, target_class=1)
            dists = []
            for k in range(5):
                sub = AttackSpec(AttackKind.MI_L1, epsilon=spec.epsilon, max_features=k, target_class=1)
                ex = craft_mi_l1(x, 0, ClassProfile(idx[:k], prof.values[:k], (1,)), sub, ConstantModel(0))
                dists.append(np.abs(ex.perturbed[idx] - prof.values).sum())
            assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))

    def test_non_targeted_pool(self):
        X, y = blobs(20, [[0.2, 0.5], [0.8, 0.5], [0.5, 0.9]], 0.02, seed=1)
        ds = make_dataset(X, y)
        spec = AttackSpec(AttackKind.MI_L1, max_features=1, specificity=Specificity.NON_TARGETED)
        prof = build_profile(ds, 0, spec)
        assert prof.classes == (1, 2)

    def test_wrong_kind(self):
        with pytest.raises(ValueError):
            craft_mi_l1(np.zeros(2), 0, ClassProfile(np.array([0]), np.array([0.1]), (1,)),
                        AttackSpec(AttackKind.FGSM, target_class=1), ConstantModel(0))


def logistic(w, b=0.0):
    W = np.column_stack([np.zeros_like(w), w])
    return MlpModel([W], [np.array([0.0, b])])


class TestFgsm:
    def test_zero_epsilon_identity(self, toy_mlp):
        model, ds = toy_mlp
        spec = AttackSpec(AttackKind.FGSM, epsilon=0.0, specificity=Specificity.NON_TARGETED)
        for x, y in zip(ds.matrix[:20], ds.labels[:20]):
            ex = fgsm(model, x, int(y), spec)
            assert ex.perturbed.tobytes() == x.tobytes()

    def test_moves_exactly_epsilon(self):
        w = np.array([1.0, -2.0, 0.5])
        x = np.array([0.5, 0.5, 0.5])
        spec = AttackSpec(AttackKind.FGSM, epsilon=0.03, specificity=Specificity.NON_TARGETED)
        ex = fgsm(logistic(w), x, 1, spec)
        np.testing.assert_allclose(np.abs(ex.delta), 0.03, atol=1e-15)
        assert np.abs(ex.delta).max() <= 0.03

    @pytest.mark.parametrize("label", [0, 1])
    def test_logistic_direction(self, label):
        rng = np.random.default_rng(label)
        w = rng.normal(size=5)
        x = np.full(5, 0.5)
        spec = AttackSpec(AttackKind.FGSM, epsilon=0.01, specificity=Specificity.NON_TARGETED)
        ex = fgsm(logistic(w, 0.3), x, label, spec)
        y_pm = 1 if label == 1 else -1
        np.testing.assert_array_equal(np.sign(ex.delta), -y_pm * np.sign(w))

    def test_targeted_descends(self):
        w = np.array([1.0, -1.0])
        spec = AttackSpec(AttackKind.FGSM, epsilon=0.01, target_class=1)
        ex = fgsm(logistic(w), np.array([0.5, 0.5]), 0, spec)
        np.testing.assert_array_equal(np.sign(ex.delta), np.sign(w))

    def test_domain_clip(self):
        spec = AttackSpec(AttackKind.FGSM, epsilon=0.1, specificity=Specificity.NON_TARGETED)
        ex = fgsm(logistic(np.array([1.0])), np.array([0.97]), 0, spec)
        assert ex.perturbed[0] == 1.0


class TestBim:
    def test_single_step_equals_fgsm(self, toy_mlp):
        model, ds = toy_mlp
        for eps in (0.01, 0.05, 0.2):
            f_spec = AttackSpec(AttackKind.FGSM, epsilon=eps, specificity=Specificity.NON_TARGETED)
            b_spec = AttackSpec(AttackKind.BIM, epsilon=eps, iterations=1, alpha=eps,
                                specificity=Specificity.NON_TARGETED)
            for x, y in zip(ds.matrix[:30], ds.labels[:30]):
                a = fgsm(model, x, int(y), f_spec)
                b = bim(model, x, int(y), b_spec)
                assert a.perturbed.tobytes() == b.perturbed.tobytes()

    def test_iterated_loss_at_least_fgsm(self, toy_mlp):
        model, ds = toy_mlp
        eps = 0.1
        f_spec = AttackSpec(AttackKind.FGSM, epsilon=eps, specificity=Specificity.NON_TARGETED)
        b_spec = AttackSpec(AttackKind.BIM, epsilon=eps, iterations=10, alpha=eps / 5,
                            specificity=Specificity.NON_TARGETED)
        rng = np.random.default_rng(0)
        wins = 0
        for i in rng.choice(len(ds), 100, replace=False):
            x, y = ds.matrix[i], int(ds.labels[i])
            lf = cross_entropy(model.predict_proba(fgsm(model, x, y, f_spec).perturbed[None]), np.array([y]))
            lb = cross_entropy(model.predict_proba(bim(model, x, y, b_spec).perturbed[None]), np.array([y]))
            wins += lb >= lf - 1e-12
        assert wins >= 90

    def test_projection(self, toy_mlp):
        model, ds = toy_mlp
        spec = AttackSpec(AttackKind.BIM, epsilon=0.02, iterations=25, alpha=0.02,
                          specificity=Specificity.NON_TARGETED)
        for x, y in zip(ds.matrix[:20], ds.labels[:20]):
            ex = bim(model, x, int(y), spec)
            assert np.abs(ex.perturbed - x).max() <= 0.02
            assert budget_violations(ex, spec) == []


class TestJsma:
    def test_first_choice_brute_force(self, toy_mlp):
        model, ds = toy_mlp
        theta = 1e-4
        spec = AttackSpec(AttackKind.JSMA, epsilon=theta, theta=theta, max_features=1, target_class=2)
        checked = 0
        for x in ds.matrix[ds.labels != 2][:40]:
            x = np.clip(x, 0.0, 1.0 - 2 * theta)
            ex = jsma(model, x, 2, spec)
            if ex.support.size == 0:
                continue
            gains = []
            for i in range(x.size):
                e = np.zeros_like(x)
                e[i] = theta
                gains.append(model.predict_proba(x + e)[2])
            assert ex.support.tolist() == [int(np.argmax(gains))]
            checked += 1
        assert checked >= 10

    def test_already_target(self, toy_mlp):
        model, ds = toy_mlp
        x = ds.matrix[ds.labels == 2][0]
        assert model.predict(x) == 2
        ex = jsma(model, x, 2, AttackSpec(AttackKind.JSMA, epsilon=0.1, max_features=2, target_class=2))
        assert ex.support.size == 0 and ex.succeeded

    def test_feature_budget(self, toy_mlp):
        model, ds = toy_mlp
        for k in (1, 2, 3):
            spec = AttackSpec(AttackKind.JSMA, epsilon=0.3, theta=0.05, max_features=k, target_class=2)
            for x in ds.matrix[ds.labels == 0][:15]:
                ex = jsma(model, x, 2, spec, true_class=0)
                assert ex.support.size <= k
                assert budget_violations(ex, spec) == []

    def test_increase_only(self, toy_mlp):
        model, ds = toy_mlp
        spec = AttackSpec(AttackKind.JSMA, epsilon=0.2, theta=0.05, max_features=2, target_class=1)
        for x in ds.matrix[ds.labels == 0][:15]:
            assert (jsma(model, x, 1, spec).delta >= 0).all()

    def test_non_targeted_rejected(self, toy_mlp):
        model, _ = toy_mlp
        with pytest.raises(UnsupportedAttack):
            jsma(model, np.full(4, 0.5), 1, AttackSpec(AttackKind.JSMA, specificity=Specificity.NON_TARGETED))


@pytest.fixture(scope="module")
def svm():
    X, y = blobs(10, [[0.2, 0.2], [0.8, 0.8]], 0.05)
    return train_svm_rbf(X, y, 2, TrainConfig(gamma=2.0))


class TestExecutability:
    @pytest.mark.parametrize("kind", [AttackKind.FGSM, AttackKind.BIM])
    def test_svm_has_no_gradients(self, svm, kind):
        spec = AttackSpec(kind, target_class=1)
        with pytest.raises(UnsupportedAttack):
            (fgsm if kind is AttackKind.FGSM else bim)(svm, np.array([0.5, 0.5]), 0, spec)

    def test_svm_jsma(self, svm):
        with pytest.raises(UnsupportedAttack):
            jsma(svm, np.array([0.5, 0.5]), 1, AttackSpec(AttackKind.JSMA, target_class=1))

    @pytest.mark.parametrize("knowledge", [Knowledge.BLACK_BOX_QUERY, Knowledge.BLACK_BOX_ZERO_QUERY])
    def test_black_box_rejected(self, knowledge):
        with pytest.raises(UnsupportedAttack):
            AttackSpec(target_class=1, knowledge=knowledge).ensure_executable()

    def test_poisoning_rejected(self):
        with pytest.raises(UnsupportedAttack):
            AttackSpec(target_class=1, phase=Phase.POISONING).ensure_executable()

    def test_k_above_d(self):
        with pytest.raises(ValueError):
            AttackSpec(max_features=5, target_class=1).ensure_executable(3)

    @pytest.mark.parametrize("kwargs", [
        {"epsilon": -0.1, "target_class": 1},
        {"kind": "pgd", "target_class": 1},
        {"target_class": None},
        {"kind": AttackKind.BIM, "alpha": 0.5, "epsilon": 0.1, "target_class": 1},
        {"iterations": 0, "target_class": 1},
    ])
    def test_invalid_specs(self, kwargs):
        with pytest.raises(ValueError):
            AttackSpec(**kwargs)


class TestInvariants:
    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        kind=st.sampled_from(list(AttackKind)),
        eps=st.floats(0.0, 0.5),
        k=st.integers(0, 4),
        targeted=st.booleans(),
    )
    def test_every_example_within_budget(self, seed, kind, eps, k, targeted):
        rng = np.random.default_rng(seed)
        model = init_mlp(4, 3, (8,), seed=seed)
        X = rng.random((30, 4))
        X[rng.random(X.shape) < 0.2] = rng.choice([0.0, 1.0])
        y = rng.integers(0, 3, 30)
        y[:3] = [0, 1, 2]
        ds = make_dataset(X, y, 3)
        if kind is AttackKind.JSMA:
            targeted = True
        spec = AttackSpec(kind, epsilon=eps, max_features=k, target_class=1 if targeted else None,
                          specificity=Specificity.TARGETED if targeted else Specificity.NON_TARGETED)
        examples = craft_examples(model, ds, spec, 0, train=ds)
        assert examples
        for ex in examples:
            assert budget_violations(ex, spec) == []

    def test_fit_to_budget_exact(self):
        rng = np.random.default_rng(0)
        x = rng.random(10_000)
        for eps in (1e-2, 0.1, 0.3):
            out = fit_to_budget(x, x + eps, eps)
            assert (out - x <= eps).all()
            assert (out <= 1.0).all()

    def test_determinism_across_workers(self, toy_mlp):
        model, ds = toy_mlp
        for spec in (AttackSpec(AttackKind.MI_L1, epsilon=0.05, max_features=2, target_class=1),
                     AttackSpec(AttackKind.BIM, epsilon=0.05, specificity=Specificity.NON_TARGETED),
                     AttackSpec(AttackKind.JSMA, epsilon=0.1, max_features=2, target_class=1)):
            a = craft_examples(model, ds, spec, 0, train=ds, workers=1)
            b = craft_examples(model, ds, spec, 0, train=ds, workers=4)
            assert [e.source_index for e in a] == [e.source_index for e in b]
            assert all(p.perturbed.tobytes() == q.perturbed.tobytes() for p, q in zip(a, b))

    def test_csv_roundtrip(self, toy_mlp, tmp_path):
        model, ds = toy_mlp
        spec = AttackSpec(AttackKind.MI_L1, epsilon=0.05, max_features=2, target_class=1)
        examples = craft_examples(model, ds, spec, 0, train=ds)
        write_examples(examples, spec, tmp_path / "adv.csv", ds.feature_names, {"model": "mlp"})
        back, spec2, meta = read_examples(tmp_path / "adv.csv", ds)
        assert spec2 == spec and meta["model"] == "mlp"
        assert meta["count"] == len(examples)
        for a, b in zip(examples, back):
            assert a.perturbed.tobytes() == b.perturbed.tobytes()
            assert (a.source_index, a.succeeded, a.predicted_after) == (b.source_index, b.succeeded, b.predicted_after)
            assert budget_violations(b, spec) == []

    def test_missing_csv(self, toy_mlp, tmp_path):
        with pytest.raises(FileNotFoundError, match="adv.csv"):
            read_examples(tmp_path / "adv.csv", toy_mlp[1])

    def test_rescore_on_other_model(self, toy_mlp):
        model, ds = toy_mlp
        spec = AttackSpec(AttackKind.FGSM, epsilon=0.1, specificity=Specificity.NON_TARGETED)
        examples = craft_examples(model, ds, spec, 0)
        svm = train_svm_rbf(ds.matrix, ds.labels, 3, TrainConfig(gamma=4.0))
        again = rescore(examples, svm, spec)
        assert [e.predicted_after for e in again] == svm.predict(np.stack([e.perturbed for e in examples])).tolist()
        assert rescore(examples, model, spec)[0].succeeded == examples[0].succeeded
