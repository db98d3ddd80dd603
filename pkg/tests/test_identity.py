"""Identity model: token issuance, VID/PID construction, ledger, registry."""

import dataclasses

import pytest

from chamauth import biometric, chameleon, identity
from chamauth.biometric import new_challenge
from chamauth.errors import DecodeError, LedgerError, RegistrationError
from chamauth.identity import (
    IdentityProvider,
    Ledger,
    MetaverseIdentityToken,
    Registry,
    create_pid,
    create_vid,
    schnorr_keygen,
    schnorr_sign,
    schnorr_verify,
    verify_mit,
    verify_pid,
    verify_vid,
)


@pytest.fixture
def idp(backend_params, rng):
    return IdentityProvider(backend_params, rng=rng)


@pytest.fixture
def registered(backend_params, idp, rng):
    kp = chameleon.keygen(backend_params, rng)
    tmpl = biometric.gen_template(77, subject_id="alice")
    mit = idp.register(b"real-alice", b"anon-alice", tmpl, kp.pk, rng)
    return kp, tmpl, mit


# ---------------------------------------------------------------------------
# Schnorr signature
# ---------------------------------------------------------------------------


def test_schnorr_roundtrip(backend_params, rng):
    p = backend_params
    keypair = schnorr_keygen(p, rng)
    sig = schnorr_sign(p, keypair, b"message")
    assert schnorr_verify(p, keypair.vk, b"message", sig)
    assert not schnorr_verify(p, keypair.vk, b"other", sig)
    assert sig == schnorr_sign(p, keypair, b"message")  # deterministic


def test_schnorr_wrong_key(backend_params, rng):
    p = backend_params
    keypair = schnorr_keygen(p, rng)
    other = schnorr_keygen(p, rng)
    sig = schnorr_sign(p, keypair, b"message")
    assert not schnorr_verify(p, other.vk, b"message", sig)
    assert not schnorr_verify(p, keypair.vk, b"message", b"\x00" * 64)
    assert not schnorr_verify(p, keypair.vk, b"message", sig[:32])


# ---------------------------------------------------------------------------
# registration and the token
# ---------------------------------------------------------------------------


def test_register_roundtrip_on_ledger(backend_params, idp, registered):
    _, _, mit = registered
    fetched = idp.ledger.get(mit.digest())
    assert fetched == mit.encode()
    decoded = MetaverseIdentityToken.decode(backend_params, fetched)
    assert decoded == mit


def test_registered_mit_passes_checks(backend_params, idp, registered):
    _, _, mit = registered
    assert chameleon.check(backend_params, mit.pk, mit.ch, mit.anonymous_id, mit.check)
    assert verify_mit(backend_params, idp.verify_key, mit, idp.ledger)


def test_tampered_mit_fails_signature(backend_params, idp, registered):
    _, _, mit = registered
    tampered = dataclasses.replace(mit, anonymous_id=b"anon-alicf")
    assert not verify_mit(backend_params, idp.verify_key, tampered)


def test_register_duplicate_anonymous_id(backend_params, idp, registered, rng):
    kp2 = chameleon.keygen(backend_params, rng)
    with pytest.raises(RegistrationError):
        idp.register(b"someone", b"anon-alice", biometric.gen_template(5), kp2.pk, rng)


def test_register_rejects_empty_anon(backend_params, idp, rng):
    kp = chameleon.keygen(backend_params, rng)
    with pytest.raises(RegistrationError):
        idp.register(b"r", b"", biometric.gen_template(5), kp.pk, rng)


def test_register_rejects_inconsistent_pk(backend_params, idp, rng):
    p = backend_params
    kp = chameleon.keygen(p, rng)
    crooked = chameleon.ChameleonPublicKey(kp.pk.g1 ** 2, kp.pk.g2)
    with pytest.raises(RegistrationError):
        idp.register(b"r", b"anon-x", biometric.gen_template(5), crooked, rng)


def test_registry_survives_reload(backend_params, idp, registered, tmp_path):
    _, _, mit = registered
    reg_path = tmp_path / "registry.json"
    led_path = tmp_path / "ledger.bin"
    idp.registry.save(str(reg_path))
    idp.ledger.save(str(led_path))
    registry = Registry.load(str(reg_path))
    ledger = Ledger.load(str(led_path))
    assert registry.lookup(mit.digest()) == b"real-alice"
    assert ledger.get(mit.digest()) == mit.encode()
    reloaded = IdentityProvider(backend_params, idp.sig, ledger, registry)
    with pytest.raises(RegistrationError):
        reloaded.register(b"x", b"anon-alice", biometric.gen_template(6),
                          chameleon.keygen(backend_params).pk)


# ---------------------------------------------------------------------------
# virtual identity
# ---------------------------------------------------------------------------


def test_create_vid_verifies(backend_params, registered):
    kp, _, mit = registered
    vid = create_vid(backend_params, kp.sk, mit, b"avatar-appearance-1")
    assert verify_vid(backend_params, mit, vid)


def test_vid_wrong_key_fails(backend_params, registered, rng):
    _, _, mit = registered
    other = chameleon.keygen(backend_params, rng)
    vid = create_vid(backend_params, other.sk, mit, b"avatar-appearance-1")
    assert not verify_vid(backend_params, mit, vid)


def test_many_avatars_one_token(backend_params, registered):
    """One-to-many: 50 avatars verify against a single unchanged (h, M, R)."""
    kp, _, mit = registered
    token_bytes = mit.encode()
    for i in range(50):
        vid = create_vid(backend_params, kp.sk, mit, f"avatar-{i}".encode())
        assert verify_vid(backend_params, mit, vid)
    assert mit.encode() == token_bytes


def test_vid_wire_roundtrip(backend_params, registered):
    kp, _, mit = registered
    vid = create_vid(backend_params, kp.sk, mit, b"avatar-pixels")
    decoded = identity.VirtualIdentity.decode(backend_params, vid.encode())
    assert decoded == vid


# ---------------------------------------------------------------------------
# physical identity
# ---------------------------------------------------------------------------


def test_create_pid_full_pipeline(backend_params, registered, rng):
    kp, tmpl, mit = registered
    challenge = new_challenge(rng=None)
    salt = b"\x01" * 16
    pid = create_pid(backend_params, kp.sk, mit, challenge, salt, 0.10, rng=1234)
    assert verify_pid(backend_params, mit, pid)
    feature = pid.feature()
    assert biometric.extract_watermark(feature, salt) == challenge.nonce
    assert biometric.match(feature, tmpl, 0.32)


def test_pid_stale_challenge_detectable(backend_params, registered):
    kp, _, mit = registered
    old = new_challenge()
    fresh = new_challenge()
    assert old.nonce != fresh.nonce
    pid = create_pid(backend_params, kp.sk, mit, old, b"\x02" * 16, 0.10, rng=1)
    extracted = biometric.extract_watermark(pid.feature(), pid.salt)
    assert extracted == old.nonce
    assert extracted != fresh.nonce


def test_pid_rewatermarked_feature_fails_check(backend_params, registered):
    """Splicing a fresh challenge onto an old feature breaks the chameleon
    check: any byte change to the message changes its hash."""
    kp, _, mit = registered
    old_challenge = new_challenge()
    pid = create_pid(backend_params, kp.sk, mit, old_challenge, b"\x03" * 16, 0.10, rng=2)
    fresh = new_challenge()
    bare = biometric.BioFeature(pid.feature().code.copy(), watermark_present=False)
    respliced = biometric.embed_watermark(bare, fresh, pid.salt)
    forged = identity.PhysicalIdentity(
        chameleon.CollisionClaim(respliced.encode(), pid.claim.check), pid.salt
    )
    if respliced.encode() == pid.claim.message:
        pytest.skip("fresh challenge landed on identical feature bytes")
    assert not verify_pid(backend_params, mit, forged)


def test_pid_wire_roundtrip(backend_params, registered):
    kp, _, mit = registered
    pid = create_pid(backend_params, kp.sk, mit, new_challenge(), b"\x04" * 16, 0.10, rng=3)
    decoded = identity.PhysicalIdentity.decode(backend_params, pid.encode())
    assert decoded == pid
    assert decoded.feature().watermark_present


def test_pid_impersonator_template_mismatch(backend_params, registered):
    kp, tmpl, mit = registered
    intruder = biometric.gen_template(999, subject_id="mallory")
    pid = create_pid(
        backend_params, kp.sk, mit, new_challenge(), b"\x05" * 16, 0.10,
        live_template=intruder, rng=4,
    )
    # collision still verifies (the trapdoor holder signed it)...
    assert verify_pid(backend_params, mit, pid)
    # ...but the biometric match against the enrolled template fails
    assert not biometric.match(pid.feature(), tmpl, 0.32)


# ---------------------------------------------------------------------------
# ledger
# ---------------------------------------------------------------------------


def test_ledger_append_get():
    ledger = Ledger()
    idx = ledger.append(b"payload-0")
    assert idx == 0
    assert ledger.get(0) == b"payload-0"
    import hashlib

    assert ledger.get(hashlib.sha256(b"payload-0").digest()) == b"payload-0"


def test_ledger_unknown_lookups():
    ledger = Ledger()
    ledger.append(b"x")
    with pytest.raises(LedgerError):
        ledger.get(5)
    with pytest.raises(LedgerError):
        ledger.get(b"\x00" * 32)


def test_ledger_chain_verification_and_corruption():
    ledger = Ledger()
    for i in range(100):
        ledger.append(f"entry-{i}".encode())
    assert ledger.verify_chain()
    good = ledger.entries[50]
    ledger.entries[50] = dataclasses.replace(good, payload=b"corrupted")
    assert not ledger.verify_chain()
    ledger.entries[50] = good
    assert ledger.verify_chain()


def test_ledger_file_roundtrip(tmp_path):
    ledger = Ledger()
    for i in range(20):
        ledger.append(bytes([i]) * (i + 1))
    path = tmp_path / "ledger.bin"
    ledger.save(str(path))
    loaded = Ledger.load(str(path))
    assert len(loaded) == 20
    assert loaded.verify_chain()
    assert loaded.get(7) == bytes([7]) * 8


def test_ledger_load_rejects_corruption(tmp_path):
    ledger = Ledger()
    ledger.append(b"aaaa")
    ledger.append(b"bbbb")
    path = tmp_path / "ledger.bin"
    ledger.save(str(path))
    blob = bytearray(path.read_bytes())
    blob[-1] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(LedgerError):
        Ledger.load(str(path))


def test_all_ledger_tokens_satisfy_invariants(backend_params, idp, rng):
    """Scan: every MIT on the ledger passes its chameleon check and its
    signature; registry lookup is injective over digests."""
    p = backend_params
    digests = set()
    for i in range(5):
        kp = chameleon.keygen(p, rng)
        mit = idp.register(f"real-{i}".encode(), f"anon-{i}".encode(),
                           biometric.gen_template(i), kp.pk, rng)
        digests.add(mit.digest())
    assert len(digests) == 5
    for entry in idp.ledger.entries:
        token = MetaverseIdentityToken.decode(p, entry.payload)
        assert chameleon.check(p, token.pk, token.ch, token.anonymous_id, token.check)
        assert verify_mit(p, idp.verify_key, token, idp.ledger)
        assert idp.registry.lookup(token.digest()) is not None


def test_mit_decode_rejects_truncation(backend_params, registered):
    _, _, mit = registered
    blob = mit.encode()
    with pytest.raises(DecodeError):
        MetaverseIdentityToken.decode(backend_params, blob[:-3])
