import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import xor_reconstruct_oracle
from sealnet import cryptobox
from sealnet.cryptobox import (
    AuthenticationFailed,
    AuthorizationDenied,
    BadSignature,
    Challenge,
    ChallengeReplayed,
    CustodianNode,
    DecryptionFailed,
    DuplicateNode,
    EmptyNodeList,
    Identity,
    MissingShares,
    Rng,
    SealedBlob,
    ShareNotHeld,
    UnknownWorker,
    decrypt_blob,
    distribute_key,
    encrypt_blob,
    generate_key,
    open_sealed,
    reconstruct_key,
    request_key,
    seal_for_recipient,
    sign_challenge,
    split_key,
    verify_signature,
)


class StubLedgerView:
    """Minimal orchestrator stand-in for the release protocol."""

    def __init__(self, assignments=None, references=None):
        self.assignments = assignments or {}
        self.references = references or set()

    def worker_for_task(self, task_id):
        return self.assignments.get(task_id)

    def task_references(self, task_id, record_id):
        return (task_id, record_id) in self.references


# ---------------------------------------------------------------------------
# keys and AEAD
# ---------------------------------------------------------------------------


def test_generate_key_two_calls_distinct():
    rng = Rng(1)
    assert generate_key(rng) != generate_key(rng)


def test_generate_key_same_seed_reproducible():
    assert generate_key(Rng(7)) == generate_key(Rng(7))
    assert Rng(7).seeded and not Rng().seeded


def test_unseeded_keys_differ():
    # Production mode: no seed, no reproducibility.
    assert generate_key(Rng()) != generate_key(Rng())


def test_encrypt_decrypt_round_trip_empty():
    rng = Rng(2)
    key = generate_key(rng)
    assert decrypt_blob(key, encrypt_blob(key, b"", rng)) == b""


def test_decrypt_rejects_flipped_bit():
    rng = Rng(3)
    key = generate_key(rng)
    sealed = encrypt_blob(key, b"attack at dawn", rng)
    tampered = SealedBlob(
        nonce=sealed.nonce,
        ciphertext=bytes([sealed.ciphertext[0] ^ 1]) + sealed.ciphertext[1:],
        tag=sealed.tag,
    )
    with pytest.raises(AuthenticationFailed):
        decrypt_blob(key, tampered)


def test_decrypt_rejects_wrong_key():
    rng = Rng(4)
    sealed = encrypt_blob(generate_key(rng), b"secret", rng)
    with pytest.raises(AuthenticationFailed):
        decrypt_blob(generate_key(rng), sealed)


def test_sealed_blob_dict_round_trip():
    rng = Rng(5)
    sealed = encrypt_blob(generate_key(rng), b"payload", rng)
    assert SealedBlob.from_dict(sealed.to_dict()) == sealed


# ---------------------------------------------------------------------------
# key splitting
# ---------------------------------------------------------------------------


def test_split_single_node_share_equals_key():
    rng = Rng(6)
    key = generate_key(rng)
    share_set = split_key(key, ["n0"], rng)
    assert share_set.n == 1
    assert share_set.shares[0][1] == key


def test_split_three_nodes_xor_recovers_key():
    rng = Rng(7)
    key = generate_key(rng)
    share_set = split_key(key, ["n0", "n1", "n2"], rng)
    shares = [s for _, s in share_set.shares]
    assert xor_reconstruct_oracle(shares) == key
    assert reconstruct_key(shares, 3) == key


def test_split_rejects_duplicates_and_empty():
    rng = Rng(8)
    key = generate_key(rng)
    with pytest.raises(DuplicateNode):
        split_key(key, ["n0", "n0"], rng)
    with pytest.raises(EmptyNodeList):
        split_key(key, [], rng)


def test_reconstruct_rejects_missing_share():
    rng = Rng(9)
    key = generate_key(rng)
    shares = [s for _, s in split_key(key, ["a", "b", "c"], rng).shares]
    with pytest.raises(MissingShares):
        reconstruct_key(shares[:2], 3)


def test_corrupted_share_caught_by_aead():
    rng = Rng(10)
    key = generate_key(rng)
    sealed = encrypt_blob(key, b"round trip", rng)
    shares = [s for _, s in split_key(key, ["a", "b", "c"], rng).shares]
    shares[1] = bytes([shares[1][0] ^ 0xFF]) + shares[1][1:]
    wrong = reconstruct_key(shares, 3)  # reconstruction itself cannot tell
    assert wrong != key
    with pytest.raises(AuthenticationFailed):
        decrypt_blob(wrong, sealed)


@settings(max_examples=60, deadline=None)
@given(
    plaintext=st.binary(min_size=0, max_size=65536),
    n=st.integers(min_value=1, max_value=7),
    seed=st.integers(min_value=0, max_value=2**32),
)
def test_encrypt_split_reconstruct_decrypt_identity(plaintext, n, seed):
    rng = Rng(seed)
    key = generate_key(rng)
    sealed = encrypt_blob(key, plaintext, rng)
    share_set = split_key(key, [f"n{i}" for i in range(n)], rng)
    recovered = reconstruct_key([s for _, s in share_set.shares], n)
    assert decrypt_blob(recovered, sealed) == plaintext


def test_share_subset_unbiased_at_three_sigma():
    # XOR of a strict subset of shares should look uniform: per byte
    # position, count matches against the key over seeded trials and require
    # every position within 3 sigma of the binomial expectation.
    trials = 4096
    key = generate_key(Rng(1234))
    matches = [0] * 32
    for t in range(trials):
        rng = Rng(200_000 + t)
        share_set = split_key(key, ["a", "b", "c"], rng)
        partial = bytes(
            x ^ y for x, y in zip(share_set.shares[0][1], share_set.shares[1][1])
        )
        for i in range(32):
            if partial[i] == key[i]:
                matches[i] += 1
    p = 1.0 / 256.0
    mean = trials * p
    sigma = math.sqrt(trials * p * (1.0 - p))
    for i, m in enumerate(matches):
        assert abs(m - mean) <= 3.0 * sigma, f"byte {i}: {m} vs {mean:.1f}±{sigma:.1f}"


# ---------------------------------------------------------------------------
# identities and signatures
# ---------------------------------------------------------------------------


def test_identity_sign_verify():
    ident = Identity.generate(Rng(11))
    sig = ident.sign(b"hello")
    assert len(sig) == 64
    assert verify_signature(ident.public_key, b"hello", sig)
    assert not verify_signature(ident.public_key, b"hullo", sig)


def test_identity_reproducible_from_seed():
    assert Identity.generate(Rng(12)).public_key == Identity.generate(Rng(12)).public_key
    assert Identity.generate(Rng(12)).public_key != Identity.generate(Rng(13)).public_key


# ---------------------------------------------------------------------------
# challenge-response share release
# ---------------------------------------------------------------------------


def _release_setup():
    rng = Rng(20)
    worker = Identity.generate(rng)
    node = CustodianNode("node-0", rng.child("node"))
    key = generate_key(rng)
    share_set = split_key(key, ["node-0"], rng, record_id="rec")
    node.receive_share("rec", share_set.shares[0][1])
    view = StubLedgerView(
        assignments={"task-1": worker.public_key}, references={("task-1", "rec")}
    )
    return rng, worker, node, view


def test_release_share_happy_path():
    _, worker, node, view = _release_setup()
    challenge = node.issue_challenge("task-1")
    sig = sign_challenge(worker, challenge)
    share = node.release_share(challenge, sig, "rec", view)
    assert len(share) == 32


def test_release_share_unknown_worker():
    rng, worker, node, view = _release_setup()
    stranger = Identity.generate(rng.child("stranger"))
    challenge = node.issue_challenge("task-2")  # no assignment on the ledger
    with pytest.raises(UnknownWorker):
        node.release_share(challenge, sign_challenge(stranger, challenge), "rec", view)


def test_release_share_bad_signature():
    rng, worker, node, view = _release_setup()
    stranger = Identity.generate(rng.child("stranger"))
    challenge = node.issue_challenge("task-1")
    with pytest.raises(BadSignature):
        node.release_share(challenge, sign_challenge(stranger, challenge), "rec", view)


def test_release_share_replay_rejected():
    _, worker, node, view = _release_setup()
    challenge = node.issue_challenge("task-1")
    sig = sign_challenge(worker, challenge)
    node.release_share(challenge, sig, "rec", view)
    with pytest.raises(ChallengeReplayed):
        node.release_share(challenge, sig, "rec", view)


def test_release_share_foreign_challenge_rejected():
    _, worker, node, view = _release_setup()
    foreign = Challenge(nonce=bytes(32), task_id="task-1", node_id="node-0")
    with pytest.raises(ChallengeReplayed):
        node.release_share(foreign, sign_challenge(worker, foreign), "rec", view)


def test_release_share_unreferenced_record_denied():
    _, worker, node, view = _release_setup()
    node.receive_share("other", bytes(32))
    challenge = node.issue_challenge("task-1")
    with pytest.raises(AuthorizationDenied):
        node.release_share(challenge, sign_challenge(worker, challenge), "other", view)


def test_release_share_not_held():
    _, worker, node, view = _release_setup()
    view.references.add(("task-1", "ghost"))
    challenge = node.issue_challenge("task-1")
    with pytest.raises(ShareNotHeld):
        node.release_share(challenge, sign_challenge(worker, challenge), "ghost", view)


def test_request_key_end_to_end():
    rng = Rng(21)
    worker = Identity.generate(rng)
    nodes = [CustodianNode(f"node-{i}", rng.child(f"n{i}")) for i in range(4)]
    key = generate_key(rng)
    distribute_key(key, "rec", nodes, rng)
    view = StubLedgerView(
        assignments={"t": worker.public_key}, references={("t", "rec")}
    )
    assert request_key(worker, "t", "rec", nodes, view) == key


# ---------------------------------------------------------------------------
# sealed envelopes
# ---------------------------------------------------------------------------


def test_seal_open_round_trip():
    rng = Rng(22)
    recipient = Identity.generate(rng)
    envelope = seal_for_recipient(recipient.seal_public, b"for your eyes", rng)
    assert open_sealed(recipient, envelope) == b"for your eyes"


def test_seal_open_empty():
    rng = Rng(23)
    recipient = Identity.generate(rng)
    assert open_sealed(recipient, seal_for_recipient(recipient.seal_public, b"", rng)) == b""


def test_open_with_wrong_identity_fails():
    rng = Rng(24)
    recipient = Identity.generate(rng)
    envelope = seal_for_recipient(recipient.seal_public, b"sealed", rng)
    other = Identity.generate(rng.child("other"))
    with pytest.raises(DecryptionFailed):
        open_sealed(other, envelope)


@settings(max_examples=30, deadline=None)
@given(plaintext=st.binary(min_size=0, max_size=4096), seed=st.integers(0, 2**32))
def test_envelope_round_trip_property(plaintext, seed):
    rng = Rng(seed)
    recipient = Identity.generate(rng)
    assert open_sealed(recipient, seal_for_recipient(recipient.seal_public, plaintext, rng)) == plaintext
