import math
import random

import pytest

from bloomstream.countmin import DecayedCountMin, is_dense
from bloomstream.hashcore import HashFamily, cell_signature
from bloomstream.params import derive_cm_guarantees, derive_geometry


def _family(seed=0, k=5, p=509):
    return HashFamily.from_seed(seed, hash_count=k, partition_size=p)


def _sketch(family, decay_rate=0.001):
    return DecayedCountMin(family.hash_count, family.partition_size, decay_rate)


class TestUpdate:
    def test_first_arrival(self):
        family = _family()
        cm = _sketch(family)
        sig = cell_signature((1, 2), family)
        assert cm.update(sig, 10.0) == 1.0

    def test_same_time_again(self):
        family = _family()
        cm = _sketch(family)
        sig = cell_signature((1, 2), family)
        cm.update(sig, 10.0)
        assert cm.update(sig, 10.0) == 2.0

    def test_half_life(self):
        family = _family()
        cm = _sketch(family, decay_rate=0.001)
        sig = cell_signature((0,), family)
        cm.update(sig, 5.0)
        assert cm.update(sig, 5.0 + 1000.0) == pytest.approx(1.5, rel=1e-9)

    def test_regressing_clock_rejected(self):
        family = _family()
        cm = _sketch(family)
        cm.update(cell_signature((0,), family), 10.0)
        with pytest.raises(ValueError):
            cm.update(cell_signature((1,), family), 9.0)

    def test_decay_regrouping(self):
        # intermediate decays compose: any regrouping of the factors
        # yields the same counter value to within float tolerance
        family = _family()
        lam = 0.003
        cm = _sketch(family, decay_rate=lam)
        sig = cell_signature((42,), family)
        t1, t2, t3 = 10.0, 470.0, 1234.0
        for t in (t1, t2, t3):
            result = cm.update(sig, t)
        expected = (
            2.0 ** (-lam * (t3 - t1)) + 2.0 ** (-lam * (t3 - t2)) + 1.0
        )
        assert result == pytest.approx(expected, rel=1e-9)


class TestQuery:
    def test_never_updated(self):
        family = _family()
        cm = _sketch(family)
        assert cm.query(cell_signature((7, 7), family), 100.0) == 0.0

    def test_consistent_with_update(self):
        family = _family()
        cm = _sketch(family)
        sig = cell_signature((3,), family)
        d = cm.update(sig, 50.0)
        assert cm.query(sig, 50.0) == d
        assert cm.query(sig) == d

    def test_half_life_at_read(self):
        family = _family()
        cm = _sketch(family, decay_rate=0.001)
        sig = cell_signature((3,), family)
        cm.update(sig, 0.0)
        assert cm.query(sig, 1000.0) == pytest.approx(0.5, rel=1e-9)

    def test_does_not_mutate(self):
        family = _family()
        cm = _sketch(family, decay_rate=0.01)
        sig = cell_signature((3,), family)
        cm.update(sig, 1.0)
        cm.query(sig, 500.0)
        assert cm.clock == 1.0
        assert cm.query(sig, 1.0) == 1.0

    def test_rejects_past_query(self):
        family = _family()
        cm = _sketch(family)
        cm.update(cell_signature((0,), family), 10.0)
        with pytest.raises(ValueError):
            cm.query(cell_signature((0,), family), 5.0)


class TestIsDense:
    def test_strict_inequality(self):
        assert not is_dense(3.0, 3.0)
        assert is_dense(3.01, 3.0)
        assert not is_dense(0.0, 0.5)


class TestOneSidedError:
    def test_never_underestimates_skewed_stream(self):
        # exact decayed multiplicities maintained by a hash-map oracle;
        # sketch estimates may only sit above them
        capacity, fp = 500, 0.01
        k, p, _ = derive_geometry(capacity, fp)
        family = HashFamily.from_seed(17, hash_count=k, partition_size=p)
        lam = 0.001
        cm = DecayedCountMin(k, p, lam)
        rng = random.Random(23)
        cells = [(rng.randint(-500, 500), rng.randint(-500, 500)) for _ in range(800)]
        sigs = {c: cell_signature(c, family) for c in cells}
        oracle = {}
        t = 0.0
        for _ in range(5000):
            t += 1.0
            c = cells[min(int(rng.expovariate(1.0 / 60.0)), len(cells) - 1)]
            cm.update(sigs[c], t)
            value, last = oracle.get(c, (0.0, t))
            oracle[c] = (value * 2.0 ** (-lam * (t - last)) + 1.0, t)
        for c, (value, last) in oracle.items():
            exact = value * 2.0 ** (-lam * (t - last))
            estimate = cm.query(sigs[c], t)
            assert estimate >= exact - 1e-9 * max(1.0, exact)

    def test_overestimate_bound_single_stream(self):
        capacity, fp = 500, 0.01
        k, p, _ = derive_geometry(capacity, fp)
        error_margin, failure_prob = derive_cm_guarantees(capacity, fp)
        family = HashFamily.from_seed(5, hash_count=k, partition_size=p)
        lam = 0.001
        cm = DecayedCountMin(k, p, lam)
        rng = random.Random(41)
        cells = [(rng.randint(-10**4, 10**4), i) for i in range(2000)]
        sigs = {c: cell_signature(c, family) for c in cells}
        oracle = {}
        t = 0.0
        for _ in range(10**4):
            t += 1.0
            c = cells[min(int(rng.paretovariate(1.1)) - 1, len(cells) - 1)]
            cm.update(sigs[c], t)
            value, last = oracle.get(c, (0.0, t))
            oracle[c] = (value * 2.0 ** (-lam * (t - last)) + 1.0, t)
        total_mass = sum(
            value * 2.0 ** (-lam * (t - last)) for value, last in oracle.values()
        )
        allowance = error_margin * total_mass
        violations = 0
        for c, (value, last) in oracle.items():
            exact = value * 2.0 ** (-lam * (t - last))
            if cm.query(sigs[c], t) - exact > allowance:
                violations += 1
        assert violations / len(oracle) <= failure_prob


class TestValidation:
    def test_rejects_bad_decay(self):
        with pytest.raises(ValueError):
            DecayedCountMin(3, 7, 0.0)
        with pytest.raises(ValueError):
            DecayedCountMin(3, 7, 1.0)

    def test_fill_ratio(self):
        family = _family(k=2, p=5)
        cm = _sketch(family)
        assert cm.fill_ratio() == 0.0
        cm.update(cell_signature((1,), family), 1.0)
        assert cm.fill_ratio() == pytest.approx(2 / 10)
        assert cm.table_size == 10
