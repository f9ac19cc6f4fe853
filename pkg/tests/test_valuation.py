import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sealnet.ledger import PaymentRecorded
from sealnet.valuation import (
    Accounts,
    ContributivityVector,
    EmptyContributivity,
    InsufficientBalance,
    InvalidPerformance,
    MissingPerformance,
    NoModelAvailable,
    apply_split,
    compute_contributivity,
    orchestrate_loo_jobs,
    plan_loo_subsets,
    split_payment,
)

D1 = "aa" * 32
D2 = "bb" * 32
D3 = "cc" * 32


# ---------------------------------------------------------------------------
# contributivity
# ---------------------------------------------------------------------------


def test_marginal_scores_normalized():
    vec = compute_contributivity("ch", [D1, D2], 0.9, {D1: 0.8, D2: 0.9})
    assert vec.scores() == {D1: 1.0, D2: 0.0}
    assert vec.basis_performance == 0.9


def test_uniform_fallback_when_all_raw_zero():
    vec = compute_contributivity("ch", [D1, D2], 0.9, {D1: 0.9, D2: 0.9})
    assert vec.scores() == {D1: 0.5, D2: 0.5}


def test_harmful_datum_clamped_to_zero():
    vec = compute_contributivity("ch", [D1, D2], 0.9, {D1: 0.95, D2: 0.7})
    assert vec.scores()[D1] == 0.0
    assert vec.scores()[D2] == 1.0


def test_zero_for_useless_among_useful():
    vec = compute_contributivity("ch", [D1, D2, D3], 0.9, {D1: 0.9, D2: 0.6, D3: 0.8})
    assert vec.scores()[D1] == 0.0
    assert vec.scores()[D2] > vec.scores()[D3] > 0.0


def test_contributivity_input_validation():
    with pytest.raises(MissingPerformance):
        compute_contributivity("ch", [D1, D2], 0.9, {D1: 0.8})
    with pytest.raises(InvalidPerformance):
        compute_contributivity("ch", [D1], 1.5, {D1: 0.8})
    with pytest.raises(InvalidPerformance):
        compute_contributivity("ch", [D1], 0.9, {D1: -0.1})


@settings(max_examples=100, deadline=None)
@given(
    perfs=st.lists(st.floats(0, 1), min_size=1, max_size=8),
    full=st.floats(0, 1),
)
def test_scores_always_sum_to_one(perfs, full):
    data_ids = [f"{i:02x}" * 32 for i in range(len(perfs))]
    vec = compute_contributivity("ch", data_ids, full, dict(zip(data_ids, perfs)))
    assert abs(sum(s for _, s in vec.entries) - 1.0) <= 1e-12
    assert all(s >= 0 for _, s in vec.entries)


# ---------------------------------------------------------------------------
# leave-one-out planning
# ---------------------------------------------------------------------------


def test_plan_counts():
    plans = plan_loo_subsets([D1, D2, D3])
    assert len(plans) == 4
    assert plans[0] == (None, tuple(sorted([D1, D2, D3])))
    omitted = {d for d, _ in plans[1:]}
    assert omitted == {D1, D2, D3}
    for d, subset in plans[1:]:
        assert d not in subset and len(subset) == 2


def test_single_datum_plan_has_empty_subset():
    plans = plan_loo_subsets([D1])
    assert plans == [(None, (D1,)), (D1, ())]


class _Scheduler:
    def __init__(self):
        self.calls = []

    def create_shadow_learn_task(self, challenge_id, algorithm_id, data_ids, basis_task_id):
        self.calls.append((challenge_id, algorithm_id, tuple(data_ids), basis_task_id))

        class T:
            task_id = f"task-{len(self.calls)}"

        return T()


def test_orchestrate_loo_jobs_counts_and_basis():
    sched = _Scheduler()
    tasks = orchestrate_loo_jobs(sched, "ch", "algo", [D1, D2, D3])
    assert len(tasks) == 4
    assert sched.calls[0][3] is None
    assert all(call[3] == tasks[0].task_id for call in sched.calls[1:])


def test_orchestrate_loo_jobs_requires_algorithm():
    with pytest.raises(NoModelAvailable):
        orchestrate_loo_jobs(_Scheduler(), "ch", "", [D1])


# ---------------------------------------------------------------------------
# payment splitting
# ---------------------------------------------------------------------------


def _vec(scores: dict) -> ContributivityVector:
    return ContributivityVector(
        challenge_id="ch", entries=tuple(sorted(scores.items())), basis_performance=0.9
    )


OWNERS = {D1: "olivia", D2: "owen", D3: "ona"}


def test_split_all_to_single_useful_datum():
    split = split_payment(100, _vec({D1: 1.0, D2: 0.0}), OWNERS, "dev", fee_rate=0.1)
    assert split.infrastructure_fee == 10
    assert split.algorithm_share == 45
    assert split.data_shares == (("olivia", 45), ("owen", 0))
    total = split.infrastructure_fee + split.algorithm_share + sum(n for _, n in split.data_shares)
    assert total == 100


def test_split_even_scores_remainder_to_lower_hex():
    split = split_payment(100, _vec({D1: 0.5, D2: 0.5}), OWNERS, "dev", fee_rate=0.1)
    assert split.data_shares == (("olivia", 23), ("owen", 22))


def test_split_floor_edge_single_credit():
    split = split_payment(1, _vec({D1: 1.0}), OWNERS, "dev", fee_rate=0.1)
    assert split.infrastructure_fee == 0
    assert split.algorithm_share == 0
    assert split.data_shares == (("olivia", 1),)


def test_split_empty_contributivity():
    with pytest.raises(EmptyContributivity):
        split_payment(10, _vec({}), OWNERS, "dev")


def test_split_rejects_bad_inputs():
    with pytest.raises(ValueError):
        split_payment(0, _vec({D1: 1.0}), OWNERS, "dev")
    with pytest.raises(ValueError):
        split_payment(10, _vec({D1: 1.0}), OWNERS, "dev", fee_rate=1.0)


@settings(max_examples=150, deadline=None)
@given(
    total=st.integers(1, 10_000),
    fee_rate=st.floats(0, 0.99),
    raws=st.lists(st.floats(0, 1), min_size=1, max_size=6),
)
def test_split_conserves_exactly(total, fee_rate, raws):
    data_ids = [f"{i:02x}" * 32 for i in range(len(raws))]
    s = sum(raws)
    scores = {d: (r / s if s > 0 else 1.0 / len(raws)) for d, r in zip(data_ids, raws)}
    owners = {d: f"owner-{i}" for i, d in enumerate(data_ids)}
    split = split_payment(total, _vec(scores), owners, "dev", fee_rate=fee_rate)
    assert (
        split.infrastructure_fee
        + split.algorithm_share
        + sum(n for _, n in split.data_shares)
        == total
    )
    assert all(n >= 0 for _, n in split.data_shares)


@settings(max_examples=150, deadline=None)
@given(
    total=st.integers(1, 10_000),
    raw1=st.floats(0.0, 1.0),
    raw2=st.floats(0.0, 1.0),
)
def test_dominance_never_inverted(total, raw1, raw2):
    # A strictly more useful datum never earns less than a less useful one.
    s = raw1 + raw2
    if s == 0:
        scores = {D1: 0.5, D2: 0.5}
    else:
        scores = {D1: raw1 / s, D2: raw2 / s}
    split = split_payment(total, _vec(scores), OWNERS, "dev", fee_rate=0.1)
    paid = dict(split.data_shares)
    if scores[D1] > scores[D2]:
        assert paid["olivia"] >= paid["owen"]
    elif scores[D2] > scores[D1]:
        assert paid["owen"] >= paid["olivia"]


# ---------------------------------------------------------------------------
# accounts
# ---------------------------------------------------------------------------


def test_apply_split_conserves_and_emits_event():
    accounts = Accounts()
    accounts.ensure("user", 100)
    split = split_payment(100, _vec({D1: 1.0, D2: 0.0}), OWNERS, "dev", fee_rate=0.1)
    event = apply_split(accounts, "user", split)
    assert isinstance(event, PaymentRecorded)
    assert accounts.balance("user") == 0
    assert accounts.balance("olivia") == 45
    assert accounts.balance("dev") == 45
    assert accounts.balance("infra") == 10
    assert accounts.total() == 100


def test_apply_split_atomic_on_insufficient_balance():
    accounts = Accounts()
    accounts.ensure("user", 50)
    split = split_payment(100, _vec({D1: 1.0}), OWNERS, "dev")
    with pytest.raises(InsufficientBalance):
        apply_split(accounts, "user", split)
    assert accounts.balance("user") == 50
    assert accounts.total() == 50


def test_self_payment_nets_out():
    accounts = Accounts()
    accounts.ensure("olivia", 100)
    split = split_payment(100, _vec({D1: 1.0}), OWNERS, "dev", fee_rate=0.1)
    apply_split(accounts, "olivia", split)
    # olivia pays 100 and receives her own 45 data share back
    assert accounts.balance("olivia") == 45
    assert accounts.total() == 100


def test_balance_never_negative():
    accounts = Accounts()
    accounts.ensure("a", 5)
    with pytest.raises(InsufficientBalance):
        accounts.debit("a", 6)
    assert accounts.balance("a") == 5


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_conservation_over_random_payment_sequences(data):
    accounts = Accounts()
    names = ["u0", "u1", "u2", "u3"]
    for name in names:
        accounts.ensure(name, data.draw(st.integers(0, 500)))
    start_total = accounts.total()
    for _ in range(data.draw(st.integers(1, 12))):
        payer = data.draw(st.sampled_from(names))
        total = data.draw(st.integers(1, 200))
        raw = data.draw(st.floats(0.01, 1.0))
        scores = {D1: raw / (raw + 0.5), D2: 0.5 / (raw + 0.5)}
        split = split_payment(total, _vec(scores), OWNERS, "dev", fee_rate=0.1)
        try:
            apply_split(accounts, payer, split)
        except InsufficientBalance:
            pass
        # credits only move, they are never created or destroyed
        assert accounts.total() == start_total
