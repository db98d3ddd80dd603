"""Operator command line: key and token lifecycle, protocol sessions over
TCP, op-count and timing benchmarks, and the synthetic biometrics
experiment."""

from __future__ import annotations

import hashlib
import json
import random
import socket
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import biometric, chameleon, identity, tracing
from .errors import ChamAuthError
from .group_backend import SystemParams, measure, setup, toy_setup
from .protocol import (
    OnePartyProver,
    OnePartyVerifier,
    SessionConfig,
    TcpTransport,
    TwoPartyInitiator,
    TwoPartyResponder,
    drive,
)

PARAMS_FILE = "params.json"
IDP_KEY_FILE = "idp.key"
IDP_PUB_FILE = "idp.pub"
LEDGER_FILE = "ledger.bin"
REGISTRY_FILE = "registry.json"

TABLE2_EXPECTED = {
    "hash": (2, 0, 0, 1, 0),
    "check": (0, 0, 0, 1, 2),
    "sign": (1, 0, 0, 1, 0),
    "verify": (0, 0, 0, 2, 4),
}


@dataclass
class Config:
    backend: str
    toy_q: int | None
    data_dir: Path
    noise_rate: float
    threshold: float
    challenge_window: float

    def make_params(self) -> SystemParams:
        if self.backend == "toy":
            if self.toy_q is None:
                raise click.UsageError("--toy-q is required with the toy backend")
            return toy_setup(self.toy_q)
        if self.toy_q is not None:
            raise click.UsageError("--toy-q only applies to the toy backend")
        return setup(128)

    def session_config(self) -> SessionConfig:
        return SessionConfig(
            noise_rate=self.noise_rate,
            threshold=self.threshold,
            challenge_window=self.challenge_window,
        )


def _load_saved_backend(data_dir: Path) -> tuple[str, int | None] | None:
    path = data_dir / PARAMS_FILE
    if not path.exists():
        return None
    blob = json.loads(path.read_text())
    return blob["backend"], blob.get("toy_q")


@click.group()
@click.option("--backend", type=click.Choice(["curve", "toy"]), default=None,
              help="Group backend (defaults to the data dir's choice, else curve).")
@click.option("--toy-q", type=int, default=None, help="Toy backend prime order.")
@click.option("--data-dir", envvar="CHAMAUTH_DATA_DIR", default="chamauth-data",
              type=click.Path(path_type=Path), show_default=True)
@click.option("--noise", "noise_rate", type=float, default=0.10, show_default=True,
              help="Biometric capture noise rate.")
@click.option("--threshold", type=float, default=biometric.DEFAULT_THRESHOLD,
              show_default=True, help="Fractional Hamming distance threshold.")
@click.option("--challenge-window", type=float, default=30.0, show_default=True,
              help="Challenge freshness window in seconds.")
@click.pass_context
def main(ctx, backend, toy_q, data_dir, noise_rate, threshold, challenge_window):
    """Chameleon-signature avatar authentication toolkit."""
    if backend is None:
        saved = _load_saved_backend(data_dir)
        if saved is not None:
            backend, saved_q = saved
            toy_q = toy_q if toy_q is not None else saved_q
        else:
            backend = "curve"
    ctx.obj = Config(backend, toy_q, data_dir, noise_rate, threshold, challenge_window)


def _fail(message: str) -> None:
    raise click.ClickException(message)


def _make_rng(seed: int | None) -> random.Random | None:
    return random.Random(seed) if seed is not None else None


# ---------------------------------------------------------------------------
# keys and templates
# ---------------------------------------------------------------------------


@main.command()
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None,
              help="Deterministic key generation (toy backend only).")
@click.pass_obj
def keygen(cfg: Config, out: Path, seed):
    """Generate a chameleon key pair; writes OUT (secret) and OUT.pub."""
    if seed is not None and cfg.backend != "toy":
        _fail("--seed is refused for key generation on the production backend")
    params = cfg.make_params()
    keypair = chameleon.keygen(params, _make_rng(seed))
    out.write_bytes(chameleon.encode_key_file(params, keypair))
    pub_path = out.with_suffix(out.suffix + ".pub")
    pub_path.write_bytes(chameleon.encode_key_file(params, pk=keypair.pk))
    click.echo(f"secret key: {out}")
    click.echo(f"public key: {pub_path}")


@main.command("gen-template")
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None)
@click.option("--subject", default="", help="Opaque label for the template.")
@click.pass_obj
def gen_template(cfg: Config, out: Path, seed, subject):
    """Generate a synthetic iris template file."""
    template = biometric.gen_template(seed, subject_id=subject)
    out.write_bytes(template.encode())
    click.echo(f"template: {out} ({biometric.IRIS_CODE_BITS} bits)")


# ---------------------------------------------------------------------------
# identity provider
# ---------------------------------------------------------------------------


def _idp_paths(cfg: Config) -> dict[str, Path]:
    d = cfg.data_dir
    return {
        "params": d / PARAMS_FILE,
        "key": d / IDP_KEY_FILE,
        "pub": d / IDP_PUB_FILE,
        "ledger": d / LEDGER_FILE,
        "registry": d / REGISTRY_FILE,
    }


def _load_idp(cfg: Config, params: SystemParams) -> identity.IdentityProvider:
    paths = _idp_paths(cfg)
    if not paths["key"].exists():
        _fail(f"no IDP at {cfg.data_dir}; run 'chamauth idp init' first")
    sk = params.decode_scalar(paths["key"].read_bytes())
    vk = params.decode_g1(paths["pub"].read_bytes())
    ledger = identity.Ledger.load(str(paths["ledger"])) if paths["ledger"].exists() else identity.Ledger()
    registry = (
        identity.Registry.load(str(paths["registry"]))
        if paths["registry"].exists()
        else identity.Registry()
    )
    return identity.IdentityProvider(
        params, identity.SchnorrKeyPair(sk, vk), ledger, registry
    )


def _save_idp(cfg: Config, idp: identity.IdentityProvider) -> None:
    paths = _idp_paths(cfg)
    idp.ledger.save(str(paths["ledger"]))
    idp.registry.save(str(paths["registry"]))


@main.group()
def idp():
    """Identity-provider operations."""


@idp.command("init")
@click.option("--seed", type=int, default=None, help="Deterministic IDP key (tests).")
@click.pass_obj
def idp_init(cfg: Config, seed):
    """Initialize the IDP: backend parameters, signing key, empty ledger."""
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    paths = _idp_paths(cfg)
    if paths["key"].exists():
        _fail(f"IDP already initialized at {cfg.data_dir}")
    params = cfg.make_params()
    keypair = identity.schnorr_keygen(params, _make_rng(seed))
    paths["params"].write_text(json.dumps({"backend": cfg.backend, "toy_q": cfg.toy_q}))
    paths["key"].write_bytes(params.encode_scalar(keypair.sk))
    paths["pub"].write_bytes(keypair.vk.encode())
    identity.Ledger().save(str(paths["ledger"]))
    identity.Registry().save(str(paths["registry"]))
    click.echo(f"IDP initialized at {cfg.data_dir} (backend: {cfg.backend})")


@idp.command("register")
@click.option("--id", "real_id", required=True, help="Player's real identity.")
@click.option("--anon", required=True, help="Anonymous identity M.")
@click.option("--template", required=True, type=click.Path(path_type=Path, exists=True))
@click.option("--pubkey", required=True, type=click.Path(path_type=Path, exists=True))
@click.option("--out-mit", type=click.Path(path_type=Path), default=None)
@click.option("--seed", type=int, default=None)
@click.pass_obj
def idp_register(cfg: Config, real_id, anon, template, pubkey, out_mit, seed):
    """Audit a player and issue a signed metaverse identity token."""
    params = cfg.make_params()
    idp_obj = _load_idp(cfg, params)
    tmpl = biometric.BioTemplate(biometric.decode_bits(template.read_bytes()))
    _, pk = chameleon.decode_key_file(params, pubkey.read_bytes())
    if pk is None:
        _fail(f"{pubkey} carries no public key")
    try:
        mit = idp_obj.register(real_id.encode(), anon.encode(), tmpl, pk, _make_rng(seed))
    except ChamAuthError as exc:
        _fail(str(exc))
    _save_idp(cfg, idp_obj)
    digest = mit.digest().hex()
    if out_mit is None:
        out_mit = cfg.data_dir / f"mit-{digest[:16]}.bin"
    out_mit.write_bytes(mit.encode())
    click.echo(f"mit digest: {digest}")
    click.echo(f"mit file: {out_mit}")


@idp.command("show")
@click.argument("digest")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Also export the raw token.")
@click.pass_obj
def idp_show(cfg: Config, digest, out):
    """Look a token up on the ledger by its digest."""
    params = cfg.make_params()
    idp_obj = _load_idp(cfg, params)
    try:
        payload = idp_obj.ledger.get(bytes.fromhex(digest))
    except (ValueError, ChamAuthError):
        _fail(f"no ledger entry with digest {digest}")
    mit = identity.MetaverseIdentityToken.decode(params, payload)
    click.echo(json.dumps({
        "digest": digest,
        "anonymous_id": mit.anonymous_id.decode(errors="replace"),
        "pk_g1": mit.pk.g1.encode().hex(),
        "h": mit.ch.encode().hex(),
        "R": mit.check.encode().hex(),
        "template_bits": int(mit.template.code.size),
        "sig_valid": identity.verify_mit(params, idp_obj.verify_key, mit, idp_obj.ledger),
    }, indent=2))
    if out is not None:
        out.write_bytes(mit.encode())
        click.echo(f"token written to {out}")


# ---------------------------------------------------------------------------
# avatars and sessions
# ---------------------------------------------------------------------------


@main.group()
def avatar():
    """Avatar lifecycle."""


@avatar.command("create")
@click.option("--key", "key_path", required=True, type=click.Path(path_type=Path, exists=True))
@click.option("--mit", "mit_path", required=True, type=click.Path(path_type=Path, exists=True))
@click.option("--info", required=True, help="Avatar identity information M_a.")
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_obj
def avatar_create(cfg: Config, key_path, mit_path, info, out):
    """Create a virtual identity (M_a, R_a) under an issued token."""
    params = cfg.make_params()
    sk, _ = chameleon.decode_key_file(params, key_path.read_bytes())
    if sk is None:
        _fail(f"{key_path} carries no secret key")
    mit = identity.MetaverseIdentityToken.decode(params, mit_path.read_bytes())
    vid = identity.create_vid(params, sk, mit, info.encode())
    out.write_bytes(vid.encode())
    click.echo(f"vid: {out}")
    click.echo(f"verifies: {identity.verify_vid(params, mit, vid)}")


def _open_socket(listen: int | None, connect: str | None) -> socket.socket:
    if (listen is None) == (connect is None):
        _fail("exactly one of --listen or --connect is required")
    if listen is not None:
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(("127.0.0.1", listen))
        server.listen(1)
        conn, _ = server.accept()
        server.close()
        return conn
    host, _, port = connect.rpartition(":")
    deadline = time.monotonic() + 5.0
    while True:
        try:
            return socket.create_connection((host or "127.0.0.1", int(port)), timeout=5.0)
        except ConnectionRefusedError:
            if time.monotonic() >= deadline:
                raise
            time.sleep(0.05)


@main.group()
def session():
    """Protocol sessions over TCP."""


@session.command("run")
@click.option("--role", required=True,
              type=click.Choice(["prover", "verifier", "a", "b"]))
@click.option("--listen", type=int, default=None, help="Port to accept one peer on.")
@click.option("--connect", default=None, help="host:port of the peer.")
@click.option("--key", "key_path", type=click.Path(path_type=Path, exists=True), default=None)
@click.option("--mit", "mit_path", type=click.Path(path_type=Path, exists=True), default=None)
@click.option("--vid", "vid_path", type=click.Path(path_type=Path, exists=True), default=None)
@click.option("--retain", type=click.Path(path_type=Path), default=None,
              help="Write the retained bundle (verifier-side roles).")
@click.option("--seed", type=int, default=None)
@click.pass_obj
def session_run(cfg: Config, role, listen, connect, key_path, mit_path, vid_path, retain, seed):
    """Run one protocol session against a TCP peer."""
    params = cfg.make_params()
    paths = _idp_paths(cfg)
    if not paths["pub"].exists():
        _fail("verifier needs the IDP public key; run 'chamauth idp init'")
    idp_vk = params.decode_g1(paths["pub"].read_bytes())
    ledger = identity.Ledger.load(str(paths["ledger"])) if paths["ledger"].exists() else None
    rng = _make_rng(seed)
    sconf = cfg.session_config()

    def load_credentials():
        if key_path is None or mit_path is None or vid_path is None:
            _fail(f"role {role} needs --key, --mit and --vid")
        sk, _ = chameleon.decode_key_file(params, key_path.read_bytes())
        if sk is None:
            _fail(f"{key_path} carries no secret key")
        mit = identity.MetaverseIdentityToken.decode(params, mit_path.read_bytes())
        vid = identity.VirtualIdentity.decode(params, vid_path.read_bytes())
        return sk, mit, vid

    if role == "prover":
        sk, mit, vid = load_credentials()
        sess = OnePartyProver(params, mit, sk, vid, config=sconf, rng=rng)
    elif role == "verifier":
        sess = OnePartyVerifier(params, idp_vk, ledger=ledger, config=sconf, rng=rng)
    elif role == "a":
        sk, mit, vid = load_credentials()
        sess = TwoPartyInitiator(params, mit, sk, vid, idp_vk, ledger=ledger,
                                 config=sconf, rng=rng)
    else:
        sk, mit, vid = load_credentials()
        sess = TwoPartyResponder(params, mit, sk, vid, idp_vk, ledger=ledger,
                                 config=sconf, rng=rng)

    transport = TcpTransport(_open_socket(listen, connect))
    try:
        drive(sess, transport)
    finally:
        transport.close()

    verdict = sess.verdict
    report = {"role": role, "accepted": verdict.accepted}
    if verdict.reason is not None:
        report["reason"] = verdict.reason.name
    if sess.session_key is not None:
        report["session_key_fingerprint"] = hashlib.sha256(sess.session_key).hexdigest()[:16]
    click.echo(json.dumps(report, sort_keys=True))
    if retain is not None and verdict.retained is not None:
        bundle = tracing.TraceRequest.from_bundle(verdict.retained)
        retain.write_bytes(bundle.encode())
        click.echo(f"retained bundle: {retain}", err=True)
    if not verdict.accepted:
        sys.exit(1)


# ---------------------------------------------------------------------------
# tracing
# ---------------------------------------------------------------------------


@main.command("trace")
@click.option("--request", "request_path", required=True,
              type=click.Path(path_type=Path, exists=True))
@click.pass_obj
def trace_cmd(cfg: Config, request_path):
    """Disclose the real identity behind a retained bundle."""
    params = cfg.make_params()
    idp_obj = _load_idp(cfg, params)
    request = tracing.TraceRequest.decode(params, request_path.read_bytes())
    verdict = tracing.trace(idp_obj, request)
    click.echo(verdict.to_json())
    if verdict.reason is not tracing.TraceReason.DISCLOSED:
        sys.exit(1)


# ---------------------------------------------------------------------------
# benchmarks and the biometrics experiment
# ---------------------------------------------------------------------------


def _bench_chameleon_counts(params: SystemParams) -> dict[str, tuple[int, int, int, int, int]]:
    keypair = chameleon.keygen(params)
    rows = {}
    with measure() as ctr:
        ch, check_param = chameleon.hash(params, keypair.pk, b"bench message")
    rows["hash"] = ctr.as_tuple()
    with measure() as ctr:
        chameleon.check(params, keypair.pk, ch, b"bench message", check_param)
    rows["check"] = ctr.as_tuple()
    with measure() as ctr:
        forged = chameleon.sign(params, keypair.sk, ch, b"bench message 2")
    rows["sign"] = ctr.as_tuple()
    with measure() as ctr:
        chameleon.verify(
            params,
            keypair.pk,
            ch,
            chameleon.CollisionClaim(b"bench message", check_param),
            chameleon.CollisionClaim(b"bench message 2", forged),
        )
    rows["verify"] = ctr.as_tuple()
    return rows


@main.command("bench")
@click.option("--iterations", type=int, default=20, show_default=True)
@click.option("--table2", is_flag=True, help="Print per-algorithm op counts.")
@click.option("--table3", is_flag=True, help="Print per-phase protocol op counts.")
@click.pass_obj
def bench(cfg: Config, iterations, table2, table3):
    """Timing and operation-count report."""
    if iterations < 1:
        _fail("--iterations must be >= 1")
    params = cfg.make_params()

    if table2:
        rows = _bench_chameleon_counts(params)
        click.echo("algorithm  E1 E2 ET M1  P  status")
        ok = True
        for name, counts in rows.items():
            expected = TABLE2_EXPECTED[name]
            status = "ok" if counts == expected else f"MISMATCH expected {expected}"
            ok &= counts == expected
            e1, e2, et, m1, p = counts
            click.echo(f"{name:<10} {e1:>2} {e2:>2} {et:>2} {m1:>2} {p:>2}  {status}")
        if not ok:
            sys.exit(1)

    if table3:
        from .protocol.session import instrumented_costs

        rng = random.Random(1)
        idp_obj = identity.IdentityProvider(params, rng=rng)
        pair_a = chameleon.keygen(params, rng)
        pair_b = chameleon.keygen(params, rng)
        mit_a = idp_obj.register(b"bench-a", b"anon-bench-a",
                                 biometric.gen_template(1), pair_a.pk, rng)
        mit_b = idp_obj.register(b"bench-b", b"anon-bench-b",
                                 biometric.gen_template(2), pair_b.pk, rng)
        vid_a = identity.create_vid(params, pair_a.sk, mit_a, b"bench-avatar-a")
        vid_b = identity.create_vid(params, pair_b.sk, mit_b, b"bench-avatar-b")
        table = instrumented_costs(
            TwoPartyInitiator(params, mit_a, pair_a.sk, vid_a, idp_obj.verify_key,
                              rng=random.Random(2)),
            TwoPartyResponder(params, mit_b, pair_b.sk, vid_b, idp_obj.verify_key,
                              rng=random.Random(3)),
        )
        click.echo("party phase    cost")
        for (party, phase), ctr in sorted(table.items()):
            click.echo(f"{party:<5} {phase:<8} {ctr}")

    # timings
    keypair = chameleon.keygen(params)
    ch, check_param = chameleon.hash(params, keypair.pk, b"timing message")
    claim_a = chameleon.CollisionClaim(b"timing message", check_param)

    def timed(fn) -> float:
        samples = []
        for _ in range(iterations):
            t0 = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - t0)
        return statistics.mean(samples) * 1000

    sign_ms = timed(lambda: chameleon.sign(params, keypair.sk, ch, b"other message"))
    forged = chameleon.sign(params, keypair.sk, ch, b"other message")
    claim_b = chameleon.CollisionClaim(b"other message", forged)
    verify_ms = timed(lambda: chameleon.verify(params, keypair.pk, ch, claim_a, claim_b))
    hash_ms = timed(lambda: chameleon.hash(params, keypair.pk, b"timing message"))
    check_ms = timed(lambda: chameleon.check(params, keypair.pk, ch, b"timing message", check_param))

    template = biometric.gen_template(7)
    feature = biometric.capture(template, cfg.noise_rate, np.random.default_rng(8))
    challenge = biometric.new_challenge(np.random.default_rng(9))
    salt = b"\x07" * identity.SALT_LEN
    marked = biometric.embed_watermark(feature, challenge, salt)
    match_ms = timed(lambda: biometric.match(marked, template, cfg.threshold))
    extract_ms = timed(lambda: biometric.extract_watermark(marked, salt))

    for name, value in [
        ("hash_ms", hash_ms),
        ("check_ms", check_ms),
        ("sign_ms", sign_ms),
        ("verify_ms", verify_ms),
        ("trace_match_ms", match_ms),
        ("trace_extract_ms", extract_ms),
        ("trace_verify_ms", verify_ms),
    ]:
        click.echo(f"BENCH {name} mean={value:.3f}")
    sign_verify = sign_ms + verify_ms
    status = "ok" if sign_verify < 50.0 else "warn"
    click.echo(f"BENCH sign_verify_ms mean={sign_verify:.3f} budget=50 status={status}")


@main.command("biosim")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--noise", type=float, default=0.10, show_default=True)
@click.option("--threshold", type=float, default=biometric.DEFAULT_THRESHOLD, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def biosim(trials, noise, threshold, seed):
    """Watermarked-biometrics experiment on synthetic iris codes."""
    rng = np.random.default_rng(seed)
    frr = far = 0
    roundtrip_failures = 0
    gaps = {t: [0, 0] for t in (0.20, 0.25, 0.30, 0.35, 0.40, 0.45)}
    for _ in range(trials):
        template = biometric.gen_template(rng)
        intruder = biometric.gen_template(rng)
        salt = rng.bytes(identity.SALT_LEN)
        challenge = biometric.new_challenge(rng)
        native = biometric.capture(template, noise, rng)
        marked = biometric.embed_watermark(native, challenge, salt)
        if biometric.extract_watermark(marked, salt) != challenge.nonce:
            roundtrip_failures += 1
        if not biometric.match(marked, template, threshold):
            frr += 1
        other = biometric.embed_watermark(biometric.capture(intruder, noise, rng), challenge, salt)
        if biometric.match(other, template, threshold):
            far += 1
        for t in gaps:
            native_decision = biometric.match(native, template, t)
            marked_decision = biometric.match(marked, template, t)
            gaps[t][0] += native_decision
            gaps[t][1] += marked_decision
    click.echo(f"BIOSIM trials={trials} noise={noise} threshold={threshold}")
    click.echo(f"BIOSIM frr={frr / trials:.6f} far={far / trials:.6f} "
               f"roundtrip_failures={roundtrip_failures}")
    for t, (native_n, marked_n) in sorted(gaps.items()):
        gap_pp = abs(native_n - marked_n) / trials * 100
        click.echo(f"BIOSIM threshold={t:.2f} native={native_n / trials:.4f} "
                   f"watermarked={marked_n / trials:.4f} gap_pp={gap_pp:.3f}")


if __name__ == "__main__":
    main()
