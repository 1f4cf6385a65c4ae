import numpy as np
import pytest

from src.curriculum import (CurriculumConfig, StrategyId, partitions_for_epoch, partners_s1, partners_s2,
                            partners_s3, sample_pairs, sample_pairs_S1, sample_pairs_S2, sample_pairs_S3,
                            select_strategy)
from src.curriculum.benchmark import BENCH_COLUMNS, bench_sampling, clustered_aggregates
from src.dataset import generate
from src.losses import OBJECTIVE_CAT, OBJECTIVE_PART
from src.utils.errors import DatasetError
from tests.conftest import make_synth_config


def _aggregates(dataset, rng, dim=4):
    return {o: rng.normal(size=dim) for o in dataset.manifest}


class TestSchedule:
    @pytest.mark.parametrize('epoch, expected', [(1, 8), (4, 8), (5, 10), (10, 20), (50, 100), (75, 100)])
    def test_partition_ramp(self, epoch, expected):
        assert partitions_for_epoch(epoch, CurriculumConfig()) == expected

    def test_partitions_capped_by_objects(self):
        assert partitions_for_epoch(40, CurriculumConfig(), n_objects=30) == 30

    def test_epoch_must_be_positive(self):
        with pytest.raises(ValueError):
            partitions_for_epoch(0, CurriculumConfig())
        with pytest.raises(ValueError):
            select_strategy(0, CurriculumConfig())

    def test_curriculum_cycle(self):
        config = CurriculumConfig()
        strategies = [select_strategy(e, config).value for e in range(1, 9)]
        assert strategies == ['S1', 'S1', 'S2', 'S3', 'S1', 'S2', 'S3', 'S1']

    @pytest.mark.parametrize('preset, expected', [
        ('random', ['S1', 'S1', 'S1', 'S1']),
        ('s1s2', ['S1', 'S1', 'S2', 'S1']),
        ('s1s3', ['S1', 'S1', 'S3', 'S1']),
    ])
    def test_presets(self, preset, expected):
        config = CurriculumConfig(schedule=preset)
        assert [select_strategy(e, config).value for e in range(1, 5)] == expected

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            CurriculumConfig(schedule='hardest-first')

    def test_strategy_objectives(self):
        assert StrategyId.S1_RANDOM_SAME_CAT.objective == OBJECTIVE_CAT
        assert StrategyId.S2_NEIGHBORS_SAME_CAT.objective == OBJECTIVE_CAT
        assert StrategyId.S3_NEIGHBORS_ANY_CAT.objective == OBJECTIVE_PART

    @pytest.mark.parametrize('text', ['S2', 's2', 'S2_NEIGHBORS_SAME_CAT', 's2_neighbors'])
    def test_parse(self, text):
        assert StrategyId.parse(text) is StrategyId.S2_NEIGHBORS_SAME_CAT

    def test_validate(self):
        with pytest.raises(ValueError):
            CurriculumConfig(n_min=200).validate()
        with pytest.raises(ValueError):
            CurriculumConfig(nn_method='lsh').validate()


class TestPartners:
    def test_s1_same_category_not_self(self, rng):
        ids = np.arange(12)
        cats = ids // 4
        partners = partners_s1(ids, cats, rng)
        assert len(partners) == 12
        for o, p in zip(ids, partners):
            assert p != o and cats[p] == cats[o]

    def test_s1_singleton_category(self, rng):
        with pytest.raises(DatasetError, match='single object'):
            partners_s1(np.arange(3), np.array([0, 0, 1]), rng)

    def test_s2_partner_among_top_k(self, rng):
        ids, cats, points = clustered_aggregates(3, 10, 4, rng)
        partners = partners_s2(ids, cats, points, 3, rng, method='exact')
        for i, p in enumerate(partners):
            same = np.flatnonzero((cats == cats[i]) & (ids != ids[i]))
            d = np.sum((points[same] - points[i]) ** 2, axis=1)
            top = set(ids[same[np.argsort(d)[:3]]].tolist())
            assert p in top

    def test_s3_partner_shares_cell_or_falls_back(self, rng):
        ids, cats, points = clustered_aggregates(2, 10, 3, rng)
        partners, n_fallback, index = partners_s3(ids, cats, points, 6, rng, kmeans_iters=5)
        fallbacks = 0
        for o, p in zip(ids.tolist(), partners):
            assert p != o
            if index.cell_of(o) != index.cell_of(p) or len(index.inverted_lists[index.cell_of(o)]) < 2:
                fallbacks += 1
                assert cats[p] == cats[o]
        assert fallbacks == n_fallback

    def test_s3_all_singleton_cells(self, rng):
        ids, cats, points = clustered_aggregates(2, 3, 3, rng)
        partners, n_fallback, _ = partners_s3(ids, cats, points, 6, rng, kmeans_iters=2)
        assert n_fallback == 6
        assert all(cats[p] == cats[o] for o, p in zip(ids, partners))


class TestPartnerStatistics:
    def test_s1_partners_uniform_within_category(self):
        rng = np.random.default_rng(31)
        ids = np.arange(15)
        cats = ids // 5
        n_draws = 2000
        counts = np.zeros((15, 15), dtype=np.int64)
        for _ in range(n_draws):
            counts[ids, partners_s1(ids, cats, rng)] += 1
        sigma = np.sqrt(n_draws * 0.25 * 0.75)
        for o in ids:
            others = [p for p in ids if cats[p] == cats[o] and p != o]
            assert counts[o].sum() == n_draws
            assert np.all(np.abs(counts[o, others] - n_draws / 4) < 5 * sigma)

    def test_s2_finds_planted_near_duplicate(self):
        rng = np.random.default_rng(8)
        ids, cats, points = clustered_aggregates(2, 10, 4, rng)
        points[1] = points[0] + rng.normal(size=4) * 1e-6
        top_k, n_draws = 3, 1000
        hits = sum(partners_s2(ids, cats, points, top_k, rng, method='exact')[0] == 1 for _ in range(n_draws))
        p = 1 / top_k
        assert hits / n_draws >= p - 5 * np.sqrt(p * (1 - p) / n_draws)

    def test_s3_partners_get_closer_with_more_cells(self):
        config = CurriculumConfig()
        easy, hard = [], []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            ids, cats, points = clustered_aggregates(4, 50, 4, rng)
            for epoch, out in ((2, easy), (40, hard)):
                k = partitions_for_epoch(epoch, config, n_objects=len(ids))
                partners, _, _ = partners_s3(ids, cats, points, k, rng, kmeans_iters=config.kmeans_iters)
                out.append(np.mean(np.linalg.norm(points - points[partners], axis=1)))
        gap = np.asarray(easy) - np.asarray(hard)
        assert np.mean(hard) <= np.mean(easy)
        assert gap.mean() > 3 * gap.std(ddof=1) / np.sqrt(len(gap))


class TestSamplePairs:
    def test_s1_batch(self, toy_dataset, rng):
        batch = sample_pairs_S1(toy_dataset, rng, n_views=3, epoch=1)
        assert batch.strategy is StrategyId.S1_RANDOM_SAME_CAT
        assert [x for x, _ in batch.pairs] == sorted(toy_dataset.manifest)
        assert set(batch.images) == set(batch.objects)
        train = toy_dataset.rows_by_object('train')
        for o, rows in batch.images.items():
            assert len(rows) == 3
            assert set(rows.tolist()) <= set(train[o].tolist())

    def test_views_without_replacement_when_possible(self, toy_dataset, rng):
        # each object has 2 train states x 2 views = 4 train rows
        batch = sample_pairs_S1(toy_dataset, rng, n_views=4)
        for rows in batch.images.values():
            assert len(set(rows.tolist())) == 4

    def test_s2_batch(self, toy_dataset, rng):
        aggregates = _aggregates(toy_dataset, rng)
        batch = sample_pairs_S2(aggregates, toy_dataset, 2, rng, n_views=2, epoch=3)
        manifest = toy_dataset.manifest
        assert batch.strategy is StrategyId.S2_NEIGHBORS_SAME_CAT
        assert all(manifest[x] == manifest[y] and x != y for x, y in batch.pairs)

    def test_s3_batch(self, toy_dataset, rng):
        aggregates = _aggregates(toy_dataset, rng)
        config = CurriculumConfig(views=2, n_min=3)
        batch = sample_pairs_S3(aggregates, toy_dataset, 1, config, rng)
        assert batch.partitions == 3
        assert batch.strategy is StrategyId.S3_NEIGHBORS_ANY_CAT
        assert len(batch.pairs) == toy_dataset.n_objects

    def test_dispatch_is_seeded(self, toy_dataset):
        config = CurriculumConfig(views=2, top_k=2)
        aggregates = _aggregates(toy_dataset, np.random.default_rng(0))
        for strategy in ('S1', 'S2', 'S3'):
            a = sample_pairs(strategy, toy_dataset, 4, config, np.random.default_rng(5), aggregates)
            b = sample_pairs(strategy, toy_dataset, 4, config, np.random.default_rng(5), aggregates)
            assert a.pairs == b.pairs
            assert all(np.array_equal(a.images[o], b.images[o]) for o in a.images)

    def test_dispatch_needs_aggregates(self, toy_dataset, rng):
        with pytest.raises(ValueError):
            sample_pairs('S2', toy_dataset, 3, CurriculumConfig(), rng)

    def test_singleton_category_dataset(self, rng):
        ds = generate(make_synth_config(n_categories=2, objects_per_category=1))
        with pytest.raises(DatasetError):
            sample_pairs_S1(ds, rng)


class TestBenchmark:
    def test_rows_per_grid_point(self):
        rows = bench_sampling([10, 20], n_categories=2, dim=4, repeats=1, epoch=2)
        assert len(rows) == 6
        assert [r[1] for r in rows] == ['S1', 'S2', 'S3', 'S1', 'S2', 'S3']
        assert all(r[2] > 0 for r in rows)
        assert BENCH_COLUMNS == ('n_obj_per_cat', 'strategy', 'ns_per_object')
