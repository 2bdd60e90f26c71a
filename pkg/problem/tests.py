import tempfile
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse
from django.test import SimpleTestCase

from proxcore.exceptions import KOutOfRange
from proxcore.functions import zero_prox, zero_subgrad
from stiefel.manifold import StiefelPoint, project_to_stiefel, random_point

from .composite import (
    CompositeProblem,
    LinearMap,
    check_linear_map,
    check_smooth_part,
    identity_map,
    null_problem,
    objective,
)
from .datasets import (
    DatasetDescriptor,
    load_or_synthesize_data,
    load_samples,
    preprocess_samples,
    read_csv,
    write_csv,
)
from .exceptions import DatasetNotFound, DegenerateColumn, DimensionMismatch, EmptyData, ParseError
from .sparse_pca import ReconstructionLoss, make_sparse_pca


def data_matrix(rng, n=8, samples=20):
    return preprocess_samples(rng.standard_normal((samples, n))).T


class CompositeProblemTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(21)

    def test_identity_data_objective(self):
        prob = CompositeProblem(
            f=ReconstructionLoss(np.eye(2), 1), g=zero_subgrad(), h=zero_prox(2),
            A=identity_map(2, 1), n=2, r=1, m=2,
        )
        X = StiefelPoint(np.array([[1.0], [0.0]]))
        self.assertAlmostEqual(prob.f.value(X.data), 0.25)
        self.assertAlmostEqual(objective(prob, X), 0.25)

    def test_full_k_cancels_penalties(self):
        D = data_matrix(self.rng)
        prob = make_sparse_pca(D, 50.0, k=8 * 3, r=3)
        X = random_point(8, 3, self.rng)
        self.assertAlmostEqual(objective(prob, X), prob.f.value(X.data), places=9)

    def test_recomposition(self):
        D = data_matrix(self.rng)
        prob = make_sparse_pca(D, 2.0, k=5, r=3)
        X = random_point(8, 3, self.rng)
        x = X.data
        residual = x @ x.T @ D - D
        f = np.sum(residual ** 2) / (2 * D.shape[1])
        top = np.sort(np.abs(x).ravel())[::-1][:5].sum()
        expected = f + 2.0 * (np.abs(x).sum() - top)
        self.assertAlmostEqual(objective(prob, X), expected, places=10)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            CompositeProblem(f=ReconstructionLoss(np.eye(2), 1), g=zero_subgrad(), h=zero_prox(4),
                             A=identity_map(2, 2), n=2, r=1, m=2)
        prob = null_problem(4, 2)
        with self.assertRaises(DimensionMismatch):
            objective(prob, random_point(5, 2, self.rng))

    def test_identity_map_checks(self):
        gap, excess = check_linear_map(identity_map(6, 2), self.rng)
        self.assertLessEqual(gap, 0.0)
        self.assertLessEqual(excess, 1e-12)

    def test_check_catches_wrong_adjoint(self):
        broken = LinearMap(apply=lambda X: 2.0 * X.reshape(-1), adjoint=lambda z: z.reshape(3, 1),
                           op_norm=1.0, n=3, r=1, m=3)
        gap, excess = check_linear_map(broken, self.rng)
        self.assertGreater(gap, 0.0)
        self.assertGreater(excess, 0.0)

    def test_null_problem_is_zero(self):
        prob = null_problem(5, 2)
        X = random_point(5, 2, self.rng)
        self.assertEqual(objective(prob, X), 0.0)
        np.testing.assert_array_equal(prob.smooth_gradient(X, prob.A(X.data), np.zeros(10), 3.0),
                                      np.zeros((5, 2)))


class SparsePCATests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(22)
        self.D = data_matrix(self.rng)
        self.prob = make_sparse_pca(self.D, 1.0, k=6, r=3)

    def test_gradient_matches_finite_differences(self):
        for _ in range(5):
            X = random_point(8, 3, self.rng)
            self.assertLessEqual(check_smooth_part(self.prob.f, X.data, self.rng), 1e-5)

    def test_zero_data(self):
        f = ReconstructionLoss(np.zeros((4, 3)), 2)
        X = random_point(4, 2, self.rng)
        self.assertEqual(f.value(X.data), 0.0)
        np.testing.assert_array_equal(f.gradient(X.data), np.zeros((4, 2)))

    def test_gradient_bound_on_manifold(self):
        for _ in range(100):
            X = random_point(8, 3, self.rng)
            self.assertLessEqual(np.linalg.norm(self.prob.f.gradient(X.data)), self.prob.f.grad_bound + 1e-12)

    def test_smoothness_bound_on_manifold(self):
        f = self.prob.f
        for _ in range(100):
            X, Y = random_point(8, 3, self.rng), random_point(8, 3, self.rng)
            change = np.linalg.norm(f.gradient(X.data) - f.gradient(Y.data))
            self.assertLessEqual(change, f.smoothness * np.linalg.norm(X.data - Y.data))

    def test_rotation_invariance(self):
        for _ in range(20):
            X = random_point(8, 3, self.rng)
            Q = project_to_stiefel(self.rng.standard_normal((3, 3))).data
            fx = self.prob.f.value(X.data)
            self.assertLessEqual(abs(fx - self.prob.f.value(X.data @ Q)), 1e-10 * (1.0 + abs(fx)))

    def test_catalog_pieces(self):
        self.assertEqual(self.prob.m, 24)
        self.assertEqual(self.prob.A.op_norm, 1.0)
        self.assertEqual(self.prob.g.k, 6)
        self.assertEqual(self.prob.h.weight, 1.0)

    def test_default_k_is_n(self):
        self.assertEqual(make_sparse_pca(self.D, 1.0, r=2).g.k, 8)

    def test_k_out_of_range(self):
        with self.assertRaises(KOutOfRange):
            make_sparse_pca(self.D, 1.0, k=25, r=3)

    def test_empty_data(self):
        with self.assertRaises(EmptyData):
            make_sparse_pca(np.zeros((4, 0)), 1.0)


class DatasetTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_synthetic_is_reproducible(self):
        first = load_samples('randn-4-3', seed=42)
        second = load_samples('randn-4-3:seed=42')
        self.assertEqual(first.shape, (4, 3))
        np.testing.assert_array_equal(first, second)

    def test_model_matrix_is_features_by_samples(self):
        D = load_or_synthesize_data('randn-6-4:seed=1')
        self.assertEqual(D.shape, (4, 6))
        np.testing.assert_allclose(D.sum(axis=1), 0.0, atol=1e-12)

    def test_normalize_then_center(self):
        out = preprocess_samples(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(out, [[-0.1], [0.1]])

    def test_literal_centering(self):
        out = preprocess_samples(np.array([[3.0], [4.0]]), literal_centering=True)
        np.testing.assert_allclose(out, [[-0.8], [-0.6]])

    def test_degenerate_column(self):
        with self.assertRaises(DegenerateColumn):
            preprocess_samples(np.array([[1.0, 0.0], [2.0, 0.0]]))

    def test_csv_round_trip(self):
        matrix = np.random.default_rng(3).standard_normal((5, 3))
        path = write_csv(matrix, self.root / 'data.csv')
        self.assertEqual(path.read_text().splitlines()[0], '5,3')
        np.testing.assert_array_equal(read_csv(path), matrix)

    def test_file_descriptor(self):
        matrix = np.random.default_rng(4).standard_normal((6, 2))
        write_csv(matrix, self.root / 'data.csv')
        D = load_or_synthesize_data(f"file:{self.root / 'data.csv'}")
        np.testing.assert_allclose(D, preprocess_samples(matrix).T)

    def test_matrix_market(self):
        matrix = scipy.sparse.coo_matrix(np.array([[1.0, 0.0], [0.0, 2.0], [3.0, 0.0]]))
        scipy.io.mmwrite(str(self.root / 'data.mtx'), matrix)
        raw = load_samples(f"file:{self.root / 'data.mtx'}")
        np.testing.assert_allclose(raw, matrix.toarray())

    def test_missing_file(self):
        with self.assertRaises(DatasetNotFound):
            load_samples(f"file:{self.root / 'absent.csv'}")

    def test_bad_header(self):
        (self.root / 'bad.csv').write_text('three,two\n1,2\n')
        with self.assertRaises(ParseError):
            read_csv(self.root / 'bad.csv')

    def test_row_count_mismatch(self):
        (self.root / 'short.csv').write_text('2,2\n1,2\n')
        with self.assertRaises(ParseError):
            read_csv(self.root / 'short.csv')

    def test_descriptor_grammar(self):
        self.assertEqual(str(DatasetDescriptor.parse('randn-200-50:seed=7')), 'randn-200-50:seed=7')
        self.assertEqual(DatasetDescriptor.parse('randn-200-50:seed=7', seed=9).seed, 9)
        for text in ('mnist', 'randn-2', 'randn-3-4', 'file:'):
            with self.assertRaises(ParseError):
                DatasetDescriptor.parse(text)
        with self.assertRaises(EmptyData):
            DatasetDescriptor.parse('randn-0-4:seed=1')
