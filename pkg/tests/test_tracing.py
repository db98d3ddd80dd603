"""Tracing: disclosure on honest bundles, refusal on everything forged."""

import dataclasses

import pytest

from chamauth import biometric, chameleon, identity, tracing
from chamauth.biometric import new_challenge
from chamauth.chameleon import CollisionClaim
from chamauth.identity import IdentityProvider, PhysicalIdentity, create_pid, create_vid
from chamauth.protocol import OnePartyProver, OnePartyVerifier, one_party_run
from chamauth.tracing import TraceReason, TraceRequest, trace


@pytest.fixture
def world(backend_params, rng):
    idp = IdentityProvider(backend_params, rng=rng)
    kp = chameleon.keygen(backend_params, rng)
    tmpl = biometric.gen_template(500, subject_id="alice")
    mit = idp.register(b"real-alice", b"anon-alice", tmpl, kp.pk, rng)
    vid = create_vid(backend_params, kp.sk, mit, b"avatar-alice")
    return idp, kp, tmpl, mit, vid


def make_request(backend_params, kp, mit, vid, challenge=None, salt=b"\x09" * 16,
                 reporter=b"ops", **pid_kw):
    challenge = challenge if challenge is not None else new_challenge()
    pid = create_pid(backend_params, kp.sk, mit, challenge, salt, 0.10, **pid_kw)
    return TraceRequest(mit=mit, vid=vid, pid=pid, challenge=challenge,
                        salt=salt, reporter=reporter)


def test_trace_discloses_honest_bundle(backend_params, world):
    idp, kp, _, mit, vid = world
    verdict = trace(idp, make_request(backend_params, kp, mit, vid))
    assert verdict.reason is TraceReason.DISCLOSED
    assert verdict.disclosed == b"real-alice"


def test_trace_from_accepted_protocol_run(backend_params, world, rng):
    idp, kp, _, mit, vid = world
    prover = OnePartyProver(backend_params, mit, kp.sk, vid, rng=rng)
    verifier = OnePartyVerifier(backend_params, idp.verify_key, ledger=idp.ledger, rng=rng)
    verdict = one_party_run(prover, verifier)
    assert verdict.accepted
    request = TraceRequest.from_bundle(verdict.retained, reporter=b"bob")
    outcome = trace(idp, request)
    assert outcome.reason is TraceReason.DISCLOSED
    assert outcome.disclosed == b"real-alice"


def test_trace_bad_mit(backend_params, world):
    idp, kp, _, mit, vid = world
    tampered = dataclasses.replace(mit, anonymous_id=b"anon-evil")
    request = make_request(backend_params, kp, tampered, vid)
    assert trace(idp, request).reason is TraceReason.BAD_MIT


def test_trace_bad_vid(backend_params, world, rng):
    idp, kp, _, mit, vid = world
    other = chameleon.keygen(backend_params, rng)
    fake_vid = create_vid(backend_params, other.sk, mit, b"avatar-fake")
    request = make_request(backend_params, kp, mit, fake_vid)
    assert trace(idp, request).reason is TraceReason.BAD_VID


def test_trace_bad_freshness(backend_params, world):
    idp, kp, _, mit, vid = world
    old, fresh = new_challenge(), new_challenge()
    request = make_request(backend_params, kp, mit, vid, challenge=old)
    request = dataclasses.replace(request, challenge=fresh)
    assert trace(idp, request).reason is TraceReason.BAD_FRESHNESS


def test_trace_bad_biometric(backend_params, world):
    idp, kp, _, mit, vid = world
    intruder = biometric.gen_template(600, subject_id="intruder")
    request = make_request(backend_params, kp, mit, vid, live_template=intruder, rng=1)
    assert trace(idp, request).reason is TraceReason.BAD_BIOMETRIC


def test_trace_forged_check_param_random_element(backend_params, world, rng):
    """No-sk forgery: a random group element as R' fails the PID check."""
    idp, kp, _, mit, vid = world
    request = make_request(backend_params, kp, mit, vid)
    forged_pid = PhysicalIdentity(
        CollisionClaim(request.pid.claim.message,
                       chameleon.CheckParam(backend_params.random_g1(rng))),
        request.pid.salt,
    )
    request = dataclasses.replace(request, pid=forged_pid)
    assert trace(idp, request).reason is TraceReason.BAD_PID


def test_trace_spliced_feature_old_check_param(backend_params, world):
    """Fresh challenge spliced onto an old feature while keeping the old
    R': changing the message bytes changes m', breaking the check."""
    idp, kp, _, mit, vid = world
    old_challenge = new_challenge()
    request = make_request(backend_params, kp, mit, vid, challenge=old_challenge, rng=2)
    fresh = new_challenge()
    bare = biometric.BioFeature(request.pid.feature().code.copy(), watermark_present=False)
    respliced = biometric.embed_watermark(bare, fresh, request.salt)
    if respliced.encode() == request.pid.claim.message:
        pytest.skip("challenge splice produced identical bytes")
    spliced_pid = PhysicalIdentity(
        CollisionClaim(respliced.encode(), request.pid.claim.check), request.pid.salt
    )
    request = dataclasses.replace(request, pid=spliced_pid, challenge=fresh)
    assert trace(idp, request).reason is TraceReason.BAD_PID


def test_trace_cross_key_check_param(backend_params, world, rng):
    """R' forged under a different trapdoor never verifies against the MIT."""
    idp, kp, _, mit, vid = world
    other = chameleon.keygen(backend_params, rng)
    challenge = new_challenge()
    honest = make_request(backend_params, kp, mit, vid, challenge=challenge, rng=3)
    cross = chameleon.sign(backend_params, other.sk, mit.ch, honest.pid.claim.message)
    forged_pid = PhysicalIdentity(
        CollisionClaim(honest.pid.claim.message, cross), honest.pid.salt
    )
    request = dataclasses.replace(honest, pid=forged_pid)
    assert trace(idp, request).reason is TraceReason.BAD_PID


def test_trace_unregistered(backend_params, world, rng):
    idp, kp, _, mit, vid = world
    # an identical IDP signature but no registry record: fabricate by
    # wiping the registry copy
    fresh_idp = IdentityProvider(backend_params, idp.sig, idp.ledger, identity.Registry())
    request = make_request(backend_params, kp, mit, vid)
    assert trace(fresh_idp, request).reason is TraceReason.UNREGISTERED


def test_trace_request_file_roundtrip(backend_params, world):
    idp, kp, _, mit, vid = world
    request = make_request(backend_params, kp, mit, vid, reporter=b"whistle")
    decoded = TraceRequest.decode(backend_params, request.encode())
    assert decoded.mit == request.mit
    assert decoded.vid == request.vid
    assert decoded.pid == request.pid
    assert decoded.challenge.nonce == request.challenge.nonce
    assert decoded.salt == request.salt
    assert decoded.reporter == b"whistle"
    assert trace(idp, decoded).reason is TraceReason.DISCLOSED


def test_trace_verdict_invariant():
    with pytest.raises(ValueError):
        tracing.TraceVerdict(TraceReason.DISCLOSED, disclosed=None)
    with pytest.raises(ValueError):
        tracing.TraceVerdict(TraceReason.BAD_PID, disclosed=b"x")
    verdict = tracing.TraceVerdict(TraceReason.BAD_PID)
    assert "BadPID" in verdict.to_json()


def test_no_framing_soundness_sweep(big_toy_params, rng):
    """Adversaries without the trapdoor never reach Disclosed across the
    forgery classes (reduced-scale mirror of the acceptance criterion)."""
    p = big_toy_params
    idp = IdentityProvider(p, rng=rng)
    kp = chameleon.keygen(p, rng)
    tmpl = biometric.gen_template(42)
    mit = idp.register(b"victim", b"anon-victim", tmpl, kp.pk, rng)
    vid = create_vid(p, kp.sk, mit, b"avatar-victim")
    for i in range(100):
        challenge = new_challenge()
        honest = make_request(p, kp, mit, vid, challenge=challenge, rng=i)
        mode = i % 3
        if mode == 0:
            pid = PhysicalIdentity(
                CollisionClaim(honest.pid.claim.message,
                               chameleon.CheckParam(p.random_g1(rng))),
                honest.pid.salt,
            )
        elif mode == 1:
            bare = biometric.BioFeature(honest.pid.feature().code.copy(), watermark_present=False)
            fresh = new_challenge()
            respliced = biometric.embed_watermark(bare, fresh, honest.salt)
            if respliced.encode() == honest.pid.claim.message:
                continue
            pid = PhysicalIdentity(
                CollisionClaim(respliced.encode(), honest.pid.claim.check), honest.salt
            )
            honest = dataclasses.replace(honest, challenge=fresh)
        else:
            other = chameleon.keygen(p, rng)
            cross = chameleon.sign(p, other.sk, mit.ch, honest.pid.claim.message)
            pid = PhysicalIdentity(
                CollisionClaim(honest.pid.claim.message, cross), honest.salt
            )
        request = dataclasses.replace(honest, pid=pid)
        assert trace(idp, request).reason is not TraceReason.DISCLOSED
