import math

import numpy as np
import pytest

from gswalk.exceptions import ContractViolationError
from gswalk.instances import generate_instance
from gswalk.ortho import (basis_variance_proxies, count_nontrivial, decompose,
                          direction_expansion_residual, freeze_blocks,
                          freeze_order, gram_schmidt_sequence, project_pivot,
                          variance_proxy)
from gswalk.walk import run_walk
from conftest import make_columns


def walk_and_decompose(inst, seed=0):
    trace = run_walk(inst, np.random.default_rng(seed))
    return trace, decompose(inst, trace)


class TestFreezeOrder:
    def test_identity_two(self):
        inst = generate_instance("identity", 2, 2, 0)
        trace, dec = walk_and_decompose(inst)
        # first pivot (column 1) owns the top position, column 0 the next
        assert list(dec.order) == [0, 1]

    def test_duplicated_columns(self):
        inst = make_columns([1, 0], [1, 0])
        trace, dec = walk_and_decompose(inst)
        # pivot first (top position), then the frozen non-pivot coordinate
        assert list(dec.order) == [0, 1]

    def test_single_column(self):
        inst = make_columns([0.5, 0.0])
        _, dec = walk_and_decompose(inst)
        assert list(dec.order) == [0]

    def test_is_permutation(self):
        for seed in range(6):
            inst = generate_instance("random_unit_sphere", 3, 7, seed)
            trace, dec = walk_and_decompose(inst, seed)
            assert sorted(dec.order) == list(range(inst.n))
            assert np.array_equal(dec.order[dec.position], np.arange(inst.n))
            # the first pivot always takes the top position
            assert dec.order[inst.n - 1] == trace.steps[0].pivot

    def test_malformed_trace_rejected(self):
        inst = generate_instance("identity", 2, 2, 0)
        trace, _ = walk_and_decompose(inst)
        trace.steps = trace.steps[:-1]      # a coordinate never freezes
        with pytest.raises(ContractViolationError):
            freeze_order(trace)


class TestGramSchmidt:
    def test_identity(self):
        inst = generate_instance("identity", 3, 3, 0)
        w = gram_schmidt_sequence(inst, np.arange(3))
        assert np.allclose(w, np.eye(3), atol=1e-14)

    def test_dependent_column_zeroed(self):
        inst = make_columns([1, 0], [1, 0])
        w = gram_schmidt_sequence(inst, np.arange(2))
        assert np.allclose(w[0], [1, 0])
        assert np.all(w[1] == 0.0)

    def test_oblique_pair(self):
        inst = make_columns([1, 0], [0.5, math.sqrt(3) / 2])
        w = gram_schmidt_sequence(inst, np.arange(2))
        assert np.allclose(w[0], [1, 0], atol=1e-14)
        assert np.allclose(w[1], [0, 1], atol=1e-14)

    def test_orthonormality(self):
        for seed in range(6):
            inst = generate_instance("random_unit_sphere", 4, 8, seed)
            order = np.random.default_rng(seed).permutation(8)
            w = gram_schmidt_sequence(inst, order)
            nonzero = w[np.linalg.norm(w, axis=1) > 0.5]
            gram = nonzero @ nonzero.T
            assert np.max(np.abs(gram - np.eye(len(nonzero)))) <= 1e-8
            norms = np.linalg.norm(w, axis=1)
            assert np.all((np.abs(norms - 1) <= 1e-10) | (norms == 0.0))


class TestFreezeBlocks:
    def test_identity_two(self):
        inst = generate_instance("identity", 2, 2, 0)
        trace, dec = walk_and_decompose(inst)
        # each pivot carries exactly its own singleton block
        assert dec.blocks == {(1, 0): (1,), (0, 1): (0,)}

    def test_duplicated_columns(self):
        inst = make_columns([1, 0], [1, 0])
        trace, dec = walk_and_decompose(inst)
        assert dec.blocks == {(1, 0): (1,), (1, 1): (0,)}

    def test_single_column(self):
        inst = make_columns([0.5, 0.0])
        _, dec = walk_and_decompose(inst)
        assert dec.blocks == {(0, 0): (0,)}

    def test_partition_property(self):
        for seed in range(6):
            inst = generate_instance("random_unit_sphere", 3, 8, seed)
            trace, dec = walk_and_decompose(inst, seed)
            covered = sorted(r for q in dec.blocks.values() for r in q)
            assert covered == list(range(inst.n))
            for (p, t0) in dec.pivot_phases:
                assert dec.blocks[(p, t0 - 1)] == (int(dec.position[p]),)


class TestNontrivialCount:
    def test_identity(self):
        for n in (2, 3, 4):
            inst = generate_instance("identity", n, n, 0)
            _, dec = walk_and_decompose(inst)
            assert dec.total_nontrivial == n
            assert all(c == 1 for c in dec.block_counts.values())

    def test_duplicated_columns(self):
        inst = make_columns([1, 0], [1, 0])
        _, dec = walk_and_decompose(inst)
        assert dec.total_nontrivial == 1

    def test_rank_bound(self):
        for seed in range(8):
            inst = generate_instance("random_unit_sphere", 2, 3, seed)
            _, dec = walk_and_decompose(inst, seed)
            assert dec.total_nontrivial <= 2
            assert dec.total_nontrivial == sum(dec.block_counts.values())

    def test_dimension_bound(self):
        for seed in range(6):
            inst = generate_instance("random_unit_sphere", 4, 7, seed)
            _, dec = walk_and_decompose(inst, seed)
            assert dec.total_nontrivial <= min(inst.d, inst.n)


class TestVarianceProxy:
    def test_identity_basis(self):
        inst = generate_instance("identity", 3, 3, 0)
        _, dec = walk_and_decompose(inst)
        for i in range(3):
            v = np.zeros(3)
            v[i] = 1.0
            assert variance_proxy(inst, dec, v) == pytest.approx(1.0, abs=1e-12)

    def test_zero_vector(self):
        inst = generate_instance("random_unit_sphere", 3, 5, 1)
        _, dec = walk_and_decompose(inst)
        assert variance_proxy(inst, dec, np.zeros(3)) == 0.0

    def test_norm_bound_and_sum_bound(self):
        rng = np.random.default_rng(5)
        for seed in range(8):
            inst = generate_instance("random_unit_sphere", 3, 6, seed)
            _, dec = walk_and_decompose(inst, seed)
            for _ in range(4):
                v = rng.standard_normal(3)
                assert variance_proxy(inst, dec, v) <= v @ v + 1e-8
            proxies = basis_variance_proxies(inst, dec)
            assert np.all(proxies >= 0)
            assert proxies.sum() <= dec.total_nontrivial + 1e-8

    def test_batch_matches_scalar(self):
        inst = generate_instance("random_unit_sphere", 4, 6, 3)
        _, dec = walk_and_decompose(inst)
        proxies = basis_variance_proxies(inst, dec)
        for i in range(4):
            v = np.zeros(4)
            v[i] = 1.0
            assert proxies[i] == pytest.approx(variance_proxy(inst, dec, v),
                                               abs=1e-14)


class TestDirectionExpansion:
    def test_identity(self):
        inst = generate_instance("identity", 4, 4, 0)
        trace, dec = walk_and_decompose(inst)
        assert direction_expansion_residual(inst, trace, dec) <= 1e-12

    def test_duplicated_columns(self):
        inst = make_columns([1, 0], [1, 0])
        trace, dec = walk_and_decompose(inst)
        # M u = 0 and the expansion telescopes to zero as well
        assert direction_expansion_residual(inst, trace, dec) <= 1e-12

    def test_random(self):
        for seed in range(8):
            inst = generate_instance("random_unit_sphere", 3, 5, seed)
            trace, dec = walk_and_decompose(inst, seed)
            assert direction_expansion_residual(inst, trace, dec) <= 1e-8


class TestProjectPivot:
    def test_identity_projection(self):
        inst = generate_instance("identity", 2, 2, 0)
        _, dec = walk_and_decompose(inst)
        e1 = np.array([0.0, 1.0])
        assert np.allclose(project_pivot(dec, 1, e1), e1, atol=1e-12)

    def test_orthogonal_vector_maps_to_zero(self):
        inst = make_columns([1, 0, 0], [1, 0, 0])
        _, dec = walk_and_decompose(inst)
        v = np.array([0.0, 0.3, -0.7])
        assert np.allclose(project_pivot(dec, 1, v), 0.0, atol=1e-12)

    def test_idempotent_and_contractive(self):
        rng = np.random.default_rng(4)
        inst = generate_instance("random_unit_sphere", 4, 6, 8)
        _, dec = walk_and_decompose(inst)
        for p, _ in dec.pivot_phases:
            v = rng.standard_normal(4)
            pv = project_pivot(dec, p, v)
            assert np.max(np.abs(project_pivot(dec, p, pv) - pv)) <= 1e-10
            assert np.linalg.norm(pv) <= np.linalg.norm(v) + 1e-12

    def test_sum_of_projections_is_column_span_projector(self):
        rng = np.random.default_rng(9)
        for seed in range(5):
            inst = generate_instance("random_unit_sphere", 5, 3, seed)
            _, dec = walk_and_decompose(inst, seed)
            # independent oracle: orthogonal projector onto the column span
            u_svd, s, _ = np.linalg.svd(inst.matrix, full_matrices=False)
            basis = u_svd[:, s > 1e-10]
            v = rng.standard_normal(5)
            total = sum(project_pivot(dec, p, v) for p, _ in dec.pivot_phases)
            assert np.max(np.abs(total - basis @ (basis.T @ v))) <= 1e-8

    def test_unknown_pivot(self):
        inst = make_columns([1, 0], [1, 0])
        _, dec = walk_and_decompose(inst)
        with pytest.raises(ContractViolationError):
            project_pivot(dec, 0, np.array([1.0, 0.0]))
