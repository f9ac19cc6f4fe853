"""Contributivity scoring and the credit economy.

A datum's contributivity is its normalized leave-one-out marginal
performance: train with everything, train without the datum, keep the
(clamped) drop. Prediction fees are then split between infrastructure, the
algorithm provider, and data owners in proportion to contributivity, in
exact integer credits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import SealnetError
from .ledger import PaymentRecorded

DEFAULT_FEE_RATE = 0.1
DEFAULT_ALGORITHM_RATE = 0.5


class MissingPerformance(SealnetError):
    pass


class InvalidPerformance(SealnetError):
    pass


class EmptyContributivity(SealnetError):
    pass


class InsufficientBalance(SealnetError):
    pass


class NoModelAvailable(SealnetError):
    pass


# ---------------------------------------------------------------------------
# Contributivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContributivityVector:
    challenge_id: str
    entries: tuple[tuple[str, float], ...]  # (data_id, score), ascending data_id
    basis_performance: float

    def scores(self) -> dict[str, float]:
        return dict(self.entries)

    def to_dict(self) -> dict:
        return {
            "challenge_id": self.challenge_id,
            "basis_performance": self.basis_performance,
            "entries": [{"data_id": d, "score": s} for d, s in self.entries],
        }


def _check_perf(value: float, what: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise InvalidPerformance(f"{what} {value} outside [0, 1]")
    return value


def compute_contributivity(
    challenge_id: str,
    data_ids: Sequence[str],
    perf_full: float,
    perf_without: Mapping[str, float],
) -> ContributivityVector:
    """Leave-one-out marginal scores, clamped at zero and normalized.

    A datum whose removal does not hurt scores zero; only when every datum
    scores zero does the uniform fallback apply.
    """
    perf_full = _check_perf(perf_full, "full performance")
    raws: dict[str, float] = {}
    for d in data_ids:
        if d not in perf_without:
            raise MissingPerformance(f"no leave-one-out performance for {d[:12]}")
        raws[d] = max(0.0, perf_full - _check_perf(perf_without[d], f"performance without {d[:12]}"))
    ordered = sorted(raws)
    total = sum(raws[d] for d in ordered)
    if total > 0.0:
        entries = tuple((d, raws[d] / total) for d in ordered)
    else:
        entries = tuple((d, 1.0 / len(ordered)) for d in ordered)
    return ContributivityVector(
        challenge_id=challenge_id, entries=entries, basis_performance=perf_full
    )


def plan_loo_subsets(data_ids: Sequence[str]) -> list[tuple[str | None, tuple[str, ...]]]:
    """(omitted_datum, subset) pairs: the full set first, then one per datum."""
    full = tuple(sorted(data_ids))
    plans: list[tuple[str | None, tuple[str, ...]]] = [(None, full)]
    for d in full:
        plans.append((d, tuple(x for x in full if x != d)))
    return plans


def orchestrate_loo_jobs(scheduler, challenge_id: str, best_algorithm_id: str, data_ids: Sequence[str]):
    """Create the shadow learn tasks that measure contributivity.

    One task trains on the full dataset, one per leave-one-out subset; all use
    the current best algorithm and never touch the benchmark table. The
    scheduler must expose create_shadow_learn_task(challenge_id, algorithm_id,
    data_ids, basis_task_id).
    """
    if not data_ids:
        raise ValueError("need at least one datum to value")
    if not best_algorithm_id:
        raise NoModelAvailable(f"no benchmarked algorithm for {challenge_id}")
    plans = plan_loo_subsets(data_ids)
    _, full_set = plans[0]
    full_task = scheduler.create_shadow_learn_task(challenge_id, best_algorithm_id, full_set, None)
    tasks = [full_task]
    for _, subset in plans[1:]:
        tasks.append(
            scheduler.create_shadow_learn_task(
                challenge_id, best_algorithm_id, subset, full_task.task_id
            )
        )
    return tasks


# ---------------------------------------------------------------------------
# Accounts
# ---------------------------------------------------------------------------


class Accounts:
    """Integer credit balances; never negative, conserved by every split."""

    def __init__(self):
        self._balances: dict[str, int] = {}

    def ensure(self, account_id: str, initial: int = 0) -> None:
        if account_id not in self._balances:
            self._balances[account_id] = int(initial)

    def balance(self, account_id: str) -> int:
        return self._balances.get(account_id, 0)

    def credit(self, account_id: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("credit amount must be non-negative")
        self._balances[account_id] = self.balance(account_id) + int(amount)

    def debit(self, account_id: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("debit amount must be non-negative")
        if self.balance(account_id) < amount:
            raise InsufficientBalance(
                f"{account_id} has {self.balance(account_id)}, needs {amount}"
            )
        self._balances[account_id] -= int(amount)

    def total(self) -> int:
        return sum(self._balances.values())

    def as_dict(self) -> dict[str, int]:
        return dict(self._balances)


# ---------------------------------------------------------------------------
# Payment splitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PaymentSplit:
    total: int
    infrastructure_fee: int
    algorithm_share: int
    data_shares: tuple[tuple[str, int], ...]  # (owner account, credits) per datum
    infra_account: str
    algorithm_owner: str

    def recipients(self) -> list[tuple[str, int]]:
        out = [(self.infra_account, self.infrastructure_fee), (self.algorithm_owner, self.algorithm_share)]
        out.extend(self.data_shares)
        return out


def split_payment(
    total: int,
    contributivity: ContributivityVector,
    owner_of: Mapping[str, str],
    algorithm_owner: str,
    fee_rate: float = DEFAULT_FEE_RATE,
    infra_account: str = "infra",
    algorithm_rate: float = DEFAULT_ALGORITHM_RATE,
) -> PaymentSplit:
    """Split a prediction fee with exact integer conservation.

    fee = floor(total * fee_rate) to infrastructure; of the remainder R the
    algorithm owner gets floor(R * algorithm_rate) and the data pool
    R - that, divided as floor(score * pool) per datum. Credits lost to
    flooring go back one at a time by largest fractional part, ties broken by
    ascending data id, so a strictly more useful datum never earns less.
    """
    if total <= 0:
        raise ValueError("payment must be positive")
    if not (0.0 <= fee_rate < 1.0):
        raise ValueError("fee rate must be in [0, 1)")
    if not contributivity.entries:
        raise EmptyContributivity("no data to pay")

    fee = math.floor(total * fee_rate)
    remainder = total - fee
    algorithm_share = math.floor(remainder * algorithm_rate)
    pool = remainder - algorithm_share

    entries = sorted(contributivity.entries)  # ascending data_id
    base = [math.floor(score * pool) for _, score in entries]
    fractions = [score * pool - b for (_, score), b in zip(entries, base)]
    leftover = pool - sum(base)
    # Largest fractional part first; ascending data id breaks ties.
    order = sorted(range(len(entries)), key=lambda i: (-fractions[i], entries[i][0]))
    for k in range(leftover):
        base[order[k % len(entries)]] += 1

    data_shares = tuple(
        (owner_of[data_id], credits) for (data_id, _), credits in zip(entries, base)
    )
    return PaymentSplit(
        total=int(total),
        infrastructure_fee=fee,
        algorithm_share=algorithm_share,
        data_shares=data_shares,
        infra_account=infra_account,
        algorithm_owner=algorithm_owner,
    )


def apply_split(accounts: Accounts, payer: str, split: PaymentSplit) -> PaymentRecorded:
    """Debit the payer, credit every recipient, and return the ledger event.

    Atomic: an insufficient balance raises before any mutation.
    """
    if accounts.balance(payer) < split.total:
        raise InsufficientBalance(
            f"{payer} has {accounts.balance(payer)}, needs {split.total}"
        )
    accounts.debit(payer, split.total)
    for account_id, amount in split.recipients():
        accounts.credit(account_id, amount)
    return PaymentRecorded(payer=payer, splits=tuple(split.recipients()))
