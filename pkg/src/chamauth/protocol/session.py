"""Authentication session state machines.

One-party (claim / challenge / response / verify) and two-party (round 1 /
round 2 / session-key establishment) protocols as explicit state machines
over framed messages.  Two-party sessions measure the chameleon-parameter
and key-share group operations per phase; everything else (IDP signature
checks, hashing, biometrics) runs outside the measurement scopes.

Session keys bind the group secret K to the transcript:
SK = HMAC(tag, encode(K) || transcript_digest), confirmed with mandatory
per-direction MACs before either side releases the key.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import time
from dataclasses import dataclass
from enum import Enum, auto

from .. import biometric, chameleon, identity
from ..biometric import Challenge
from ..chameleon import CollisionClaim
from ..errors import DecodeError, ProtocolError
from ..group_backend import G1Element, OpCounter, SystemParams, measure
from ..identity import (
    Ledger,
    MetaverseIdentityToken,
    PhysicalIdentity,
    VirtualIdentity,
)
from . import messages
from .messages import AbortReason, MsgType, ProtocolMessage
from .transport import InProcessPair

__all__ = [
    "SessionConfig",
    "RetainedBundle",
    "VerifierVerdict",
    "TwoPartyResult",
    "OnePartyProver",
    "OnePartyVerifier",
    "TwoPartyInitiator",
    "TwoPartyResponder",
    "one_party_run",
    "two_party_run",
    "pump_pair",
    "drive",
    "instrumented_costs",
]

_KDF_TAG = b"CHAMAUTH-SK-v1"
_CONFIRM_TAG_A = b"CHAMAUTH-KC-A"
_CONFIRM_TAG_B = b"CHAMAUTH-KC-B"


@dataclass
class SessionConfig:
    """Knobs shared by both roles of a session."""

    noise_rate: float = 0.10
    threshold: float = biometric.DEFAULT_THRESHOLD
    challenge_window: float = 30.0


@dataclass(frozen=True)
class RetainedBundle:
    """What a verifier keeps from an accepted run, sufficient for tracing."""

    mit: MetaverseIdentityToken
    vid: VirtualIdentity
    pid: PhysicalIdentity
    challenge: Challenge
    salt: bytes


@dataclass
class VerifierVerdict:
    accepted: bool
    reason: AbortReason | None = None
    retained: RetainedBundle | None = None


@dataclass
class TwoPartyResult:
    verdict_a: VerifierVerdict
    verdict_b: VerifierVerdict
    key_a: bytes | None
    key_b: bytes | None


def _derive_session_key(k_element: G1Element, transcript_digest: bytes) -> bytes:
    return hmac.new(_KDF_TAG, k_element.encode() + transcript_digest, hashlib.sha256).digest()


def _confirm_mac(key: bytes, tag: bytes, transcript_digest: bytes) -> bytes:
    return hmac.new(key, tag + transcript_digest, hashlib.sha256).digest()


class _Session:
    """Shared mechanics: outbox, transcript, abort plumbing."""

    def __init__(self, params: SystemParams, config: SessionConfig, rng, clock):
        self.params = params
        self.config = config
        self.rng = rng
        self.clock = clock if clock is not None else time.monotonic
        self.session_id = b""
        self.transcript: list[bytes] = []
        self.done = False
        self.verdict = VerifierVerdict(accepted=False)
        self.session_key: bytes | None = None
        self.phase_costs: dict[str, OpCounter] = {}
        self._outbox: list[bytes] = []

    # -- plumbing --

    def _rand_bytes(self, n: int) -> bytes:
        if self.rng is None:
            return secrets.token_bytes(n)
        return bytes(self.rng.randrange(0, 256) for _ in range(n))

    def _emit(self, msg_type: MsgType, body: bytes) -> None:
        frame = ProtocolMessage(msg_type, self.session_id, body).frame()
        self.transcript.append(frame)
        self._outbox.append(frame)

    def take_outgoing(self) -> list[bytes]:
        out, self._outbox = self._outbox, []
        return out

    def _transcript_digest(self, upto: int | None = None) -> bytes:
        h = hashlib.sha256()
        frames = self.transcript if upto is None else self.transcript[:upto]
        for frame in frames:
            h.update(frame)
        return h.digest()

    def _abort(self, reason: AbortReason) -> None:
        self._emit(MsgType.ABORT, messages.encode_abort(reason))
        self.verdict = VerifierVerdict(accepted=False, reason=reason)
        self.session_key = None
        self.done = True

    def _finish_accept(self) -> None:
        self.verdict.accepted = True
        self.done = True

    def _phase_scope(self, phase: str):
        counter = self.phase_costs.setdefault(phase, OpCounter())
        return measure(counter)

    def _fresh_challenge(self) -> Challenge:
        return Challenge(nonce=self._rand_bytes(messages.NONCE_LEN), issued_at=self.clock())

    # -- dispatch --

    def receive(self, frame: bytes) -> None:
        if self.done:
            return
        try:
            msg = messages.parse_frame(frame)
        except DecodeError:
            if self.session_id:
                self._abort(AbortReason.MALFORMED)
            else:
                self.verdict = VerifierVerdict(accepted=False, reason=AbortReason.MALFORMED)
                self.done = True
            return
        if not self.session_id:
            self.session_id = msg.session_id  # responder side adopts the peer's id
        elif msg.session_id != self.session_id:
            self._abort(AbortReason.MALFORMED)
            return
        self.transcript.append(frame)
        if msg.msg_type == MsgType.ABORT:
            try:
                reason = messages.decode_abort(msg.body)
            except DecodeError:
                reason = AbortReason.MALFORMED
            self.verdict = VerifierVerdict(accepted=False, reason=reason)
            self.session_key = None
            self.done = True
            return
        try:
            self._handle(msg)
        except DecodeError:
            self._abort(AbortReason.MALFORMED)

    def _handle(self, msg: ProtocolMessage) -> None:
        raise NotImplementedError

    # -- shared verifier steps --

    def _check_virtual(
        self, mit: MetaverseIdentityToken, vid: VirtualIdentity, scope: str | None
    ) -> AbortReason | None:
        """Steps (a) and (b): IDP signature (and ledger presence), then the
        VID collision check.  Only the collision check is measured."""
        if not identity.verify_mit(self.params, self.idp_verify_key, mit, self.ledger):
            return AbortReason.BAD_MIT
        if scope is not None:
            with self._phase_scope(scope):
                ok = identity.verify_vid(self.params, mit, vid)
        else:
            ok = identity.verify_vid(self.params, mit, vid)
        return None if ok else AbortReason.BAD_VID

    def _check_physical_prefix(
        self, mit: MetaverseIdentityToken, pid: PhysicalIdentity, challenge: Challenge | None
    ) -> AbortReason | None:
        """Steps (d) and (e): watermark freshness, then the biometric match.
        The chameleon part of the PID check is step (f), measured separately."""
        if challenge is None:
            return AbortReason.PHASE_VIOLATION
        if self.clock() > challenge.issued_at + self.config.challenge_window:
            return AbortReason.TIMEOUT
        feature = pid.feature()
        extracted = biometric.extract_watermark(feature, pid.salt)
        if extracted != challenge.nonce:
            return AbortReason.BAD_FRESHNESS
        if not biometric.match(feature, mit.template, self.config.threshold):
            return AbortReason.BAD_BIOMETRIC
        return None


# ---------------------------------------------------------------------------
# One-party protocol (Fig. 2 / Fig. 3)
# ---------------------------------------------------------------------------


class _ProverPhase(Enum):
    START = auto()
    AWAIT_CHALLENGE = auto()
    AWAIT_VERDICT = auto()
    ESTABLISHED = auto()


class OnePartyProver(_Session):
    """Avatar claiming its identity and answering watermark challenges."""

    def __init__(
        self,
        params: SystemParams,
        mit: MetaverseIdentityToken,
        sk: int,
        vid: VirtualIdentity,
        config: SessionConfig | None = None,
        rng=None,
        clock=None,
        live_template=None,
    ):
        super().__init__(params, config or SessionConfig(), rng, clock)
        self.mit = mit
        self.sk = sk
        self.vid = vid
        self.live_template = live_template
        self.session_id = self._rand_bytes(messages.SESSION_ID_LEN)
        self.phase = _ProverPhase.START

    def start(self) -> None:
        if self.phase is not _ProverPhase.START:
            raise ProtocolError("session already started")
        self._emit(MsgType.CLAIM, messages.encode_claim(self.mit, self.vid))
        self.phase = _ProverPhase.AWAIT_CHALLENGE

    def _respond(self, nonce: bytes) -> None:
        challenge = Challenge(nonce=nonce, issued_at=self.clock())
        salt = self._rand_bytes(identity.SALT_LEN)
        pid = identity.create_pid(
            self.params,
            self.sk,
            self.mit,
            challenge,
            salt,
            self.config.noise_rate,
            live_template=self.live_template,
            rng=self._capture_rng(),
        )
        self._emit(MsgType.RESPONSE, messages.encode_response(pid))
        self.phase = _ProverPhase.AWAIT_VERDICT

    def _capture_rng(self):
        if self.rng is None:
            return None
        return self.rng.randrange(0, 1 << 63)

    def _handle(self, msg: ProtocolMessage) -> None:
        if msg.msg_type == MsgType.CHALLENGE and self.phase in (
            _ProverPhase.AWAIT_CHALLENGE,
            _ProverPhase.ESTABLISHED,
        ):
            self._respond(messages.decode_challenge(msg.body))
        elif msg.msg_type == MsgType.ACCEPT and self.phase is _ProverPhase.AWAIT_VERDICT:
            self.verdict = VerifierVerdict(accepted=True)
            self.phase = _ProverPhase.ESTABLISHED
            self.done = True
        else:
            self._abort(AbortReason.PHASE_VIOLATION)

    def reopen(self) -> None:
        """Stay responsive for dynamic re-authentication after acceptance."""
        if self.phase is not _ProverPhase.ESTABLISHED:
            raise ProtocolError("cannot reopen before first acceptance")
        self.done = False


class _VerifierPhase(Enum):
    AWAIT_CLAIM = auto()
    AWAIT_RESPONSE = auto()
    ESTABLISHED = auto()


class OnePartyVerifier(_Session):
    """Avatar checking a peer's claim: runs steps (a)-(f) in order and
    retains (MIT, VID, PID) from accepted runs for potential tracing."""

    def __init__(
        self,
        params: SystemParams,
        idp_verify_key: G1Element,
        ledger: Ledger | None = None,
        config: SessionConfig | None = None,
        rng=None,
        clock=None,
    ):
        super().__init__(params, config or SessionConfig(), rng, clock)
        self.idp_verify_key = idp_verify_key
        self.ledger = ledger
        self.phase = _VerifierPhase.AWAIT_CLAIM
        self.pending_challenge: Challenge | None = None
        self.peer_mit: MetaverseIdentityToken | None = None
        self.peer_vid: VirtualIdentity | None = None

    def _handle(self, msg: ProtocolMessage) -> None:
        if msg.msg_type == MsgType.CLAIM and self.phase is _VerifierPhase.AWAIT_CLAIM:
            mit, vid = messages.decode_claim(self.params, msg.body)
            failure = self._check_virtual(mit, vid, scope=None)
            if failure is not None:
                self._abort(failure)
                return
            self.peer_mit, self.peer_vid = mit, vid
            self.issue_challenge()
        elif msg.msg_type == MsgType.RESPONSE and self.phase is _VerifierPhase.AWAIT_RESPONSE:
            pid = messages.decode_response(self.params, msg.body)
            challenge = self.pending_challenge
            failure = self._check_physical_prefix(self.peer_mit, pid, challenge)
            if failure is not None:
                self._abort(failure)
                return
            self.pending_challenge = None  # cleared exactly once, on freshness
            if not identity.verify_pid(self.params, self.peer_mit, pid):
                self._abort(AbortReason.BAD_PID)
                return
            self.verdict = VerifierVerdict(
                accepted=True,
                retained=RetainedBundle(self.peer_mit, self.peer_vid, pid, challenge, pid.salt),
            )
            self._emit(MsgType.ACCEPT, b"")
            self.phase = _VerifierPhase.ESTABLISHED
            self.done = True
        else:
            self._abort(AbortReason.PHASE_VIOLATION)

    def issue_challenge(self) -> None:
        """Throw a fresh 128-bit challenge; usable at any time once the
        claim is validated (dynamic re-authentication)."""
        if self.phase is _VerifierPhase.AWAIT_RESPONSE:
            raise ProtocolError("a challenge is already pending")
        if self.peer_mit is None:
            raise ProtocolError("no validated claim to challenge")
        self.pending_challenge = self._fresh_challenge()
        self._emit(MsgType.CHALLENGE, messages.encode_challenge(self.pending_challenge.nonce))
        self.phase = _VerifierPhase.AWAIT_RESPONSE
        self.done = False


# ---------------------------------------------------------------------------
# Two-party protocol (Fig. 4)
# ---------------------------------------------------------------------------


class _InitiatorPhase(Enum):
    START = auto()
    AWAIT_COUNTER = auto()
    AWAIT_KEY_SHARE = auto()
    AWAIT_CONFIRM = auto()


class _TwoPartyBase(_Session):
    def __init__(
        self,
        params: SystemParams,
        mit: MetaverseIdentityToken,
        sk: int,
        vid: VirtualIdentity,
        idp_verify_key: G1Element,
        ledger: Ledger | None = None,
        config: SessionConfig | None = None,
        rng=None,
        clock=None,
        live_template=None,
    ):
        super().__init__(params, config or SessionConfig(), rng, clock)
        self.mit = mit
        self.sk = sk
        self.vid = vid
        self.idp_verify_key = idp_verify_key
        self.ledger = ledger
        self.live_template = live_template
        self.peer_mit: MetaverseIdentityToken | None = None
        self.peer_vid: VirtualIdentity | None = None
        self.pending_challenge: Challenge | None = None
        self.retained: RetainedBundle | None = None
        self._candidate_key: bytes | None = None

    def _capture_rng(self):
        if self.rng is None:
            return None
        return self.rng.randrange(0, 1 << 63)

    def _make_pid(self, nonce: bytes, scope: str) -> PhysicalIdentity:
        challenge = Challenge(nonce=nonce, issued_at=self.clock())
        salt = self._rand_bytes(identity.SALT_LEN)
        source = self.live_template if self.live_template is not None else self.mit.template
        feature = biometric.capture(source, self.config.noise_rate, self._capture_rng())
        watermarked = biometric.embed_watermark(feature, challenge, salt)
        message = watermarked.encode()
        with self._phase_scope(scope):
            check = chameleon.sign(self.params, self.sk, self.mit.ch, message)
        return PhysicalIdentity(CollisionClaim(message, check), salt)


class TwoPartyInitiator(_TwoPartyBase):
    """Avatar A: claims first, challenges second, derives K = (g^w)^(1/x)."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.session_id = self._rand_bytes(messages.SESSION_ID_LEN)
        self.phase = _InitiatorPhase.START

    def start(self) -> None:
        if self.phase is not _InitiatorPhase.START:
            raise ProtocolError("session already started")
        self._emit(MsgType.CLAIM, messages.encode_claim(self.mit, self.vid))
        self.phase = _InitiatorPhase.AWAIT_COUNTER

    def _handle(self, msg: ProtocolMessage) -> None:
        if msg.msg_type == MsgType.COUNTER_CLAIM and self.phase is _InitiatorPhase.AWAIT_COUNTER:
            mit_b, vid_b, nonce_a = messages.decode_counter_claim(self.params, msg.body)
            failure = self._check_virtual(mit_b, vid_b, scope="round2")
            if failure is not None:
                self._abort(failure)
                return
            self.peer_mit, self.peer_vid = mit_b, vid_b
            pid_a = self._make_pid(nonce_a, scope="round2")
            self.pending_challenge = self._fresh_challenge()
            self._emit(
                MsgType.RESPONSE_WITH_CHALLENGE,
                messages.encode_response_with_challenge(pid_a, self.pending_challenge.nonce),
            )
            self.phase = _InitiatorPhase.AWAIT_KEY_SHARE
        elif (
            msg.msg_type == MsgType.RESPONSE_WITH_KEY_SHARE
            and self.phase is _InitiatorPhase.AWAIT_KEY_SHARE
        ):
            pid_b, key_share = messages.decode_response_with_key_share(self.params, msg.body)
            challenge = self.pending_challenge
            failure = self._check_physical_prefix(self.peer_mit, pid_b, challenge)
            if failure is not None:
                self._abort(failure)
                return
            self.pending_challenge = None
            with self._phase_scope("session"):
                if not identity.verify_pid(self.params, self.peer_mit, pid_b):
                    failure = AbortReason.BAD_PID
                else:
                    failure = None
                    k_elem = key_share ** self.params.scalar_inverse(self.sk)
            if failure is not None:
                self._abort(failure)
                return
            self.retained = RetainedBundle(self.peer_mit, self.peer_vid, pid_b, challenge, pid_b.salt)
            self._candidate_key = _derive_session_key(k_elem, self._transcript_digest(upto=4))
            self._emit(
                MsgType.KEY_CONFIRM,
                _confirm_mac(self._candidate_key, _CONFIRM_TAG_A, self._transcript_digest(upto=4)),
            )
            self.phase = _InitiatorPhase.AWAIT_CONFIRM
        elif msg.msg_type == MsgType.KEY_CONFIRM and self.phase is _InitiatorPhase.AWAIT_CONFIRM:
            expected = _confirm_mac(self._candidate_key, _CONFIRM_TAG_B, self._transcript_digest(upto=4))
            if not hmac.compare_digest(expected, messages.decode_key_confirm(msg.body)):
                self._abort(AbortReason.BAD_KEY_CONFIRM)
                return
            self.session_key = self._candidate_key
            self.verdict = VerifierVerdict(accepted=True, retained=self.retained)
            self.done = True
        else:
            self._abort(AbortReason.PHASE_VIOLATION)


class _ResponderPhase(Enum):
    AWAIT_CLAIM = auto()
    AWAIT_RESPONSE = auto()
    AWAIT_CONFIRM = auto()


class TwoPartyResponder(_TwoPartyBase):
    """Avatar B: challenges first, shares g^w, derives K = y_a^w."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.phase = _ResponderPhase.AWAIT_CLAIM

    def _handle(self, msg: ProtocolMessage) -> None:
        if msg.msg_type == MsgType.CLAIM and self.phase is _ResponderPhase.AWAIT_CLAIM:
            mit_a, vid_a = messages.decode_claim(self.params, msg.body)
            failure = self._check_virtual(mit_a, vid_a, scope="round1")
            if failure is not None:
                self._abort(failure)
                return
            self.peer_mit, self.peer_vid = mit_a, vid_a
            self.pending_challenge = self._fresh_challenge()
            self._emit(
                MsgType.COUNTER_CLAIM,
                messages.encode_counter_claim(self.mit, self.vid, self.pending_challenge.nonce),
            )
            self.phase = _ResponderPhase.AWAIT_RESPONSE
        elif (
            msg.msg_type == MsgType.RESPONSE_WITH_CHALLENGE
            and self.phase is _ResponderPhase.AWAIT_RESPONSE
        ):
            pid_a, nonce_b = messages.decode_response_with_challenge(self.params, msg.body)
            challenge = self.pending_challenge
            failure = self._check_physical_prefix(self.peer_mit, pid_a, challenge)
            if failure is not None:
                self._abort(failure)
                return
            self.pending_challenge = None
            with self._phase_scope("round2"):
                if not identity.verify_pid(self.params, self.peer_mit, pid_a):
                    failure = AbortReason.BAD_PID
            if failure is not None:
                self._abort(failure)
                return
            pid_b = self._make_pid(nonce_b, scope="round2")
            with self._phase_scope("round2"):
                w = self.params.random_scalar(self.rng)
                key_share = self.params.g1**w
            with self._phase_scope("session"):
                k_elem = self.peer_mit.pk.g1**w
            self.retained = RetainedBundle(self.peer_mit, self.peer_vid, pid_a, challenge, pid_a.salt)
            self._emit(
                MsgType.RESPONSE_WITH_KEY_SHARE,
                messages.encode_response_with_key_share(pid_b, key_share),
            )
            self._candidate_key = _derive_session_key(k_elem, self._transcript_digest(upto=4))
            self.phase = _ResponderPhase.AWAIT_CONFIRM
        elif msg.msg_type == MsgType.KEY_CONFIRM and self.phase is _ResponderPhase.AWAIT_CONFIRM:
            expected = _confirm_mac(self._candidate_key, _CONFIRM_TAG_A, self._transcript_digest(upto=4))
            if not hmac.compare_digest(expected, messages.decode_key_confirm(msg.body)):
                self._abort(AbortReason.BAD_KEY_CONFIRM)
                return
            self.session_key = self._candidate_key
            self._emit(
                MsgType.KEY_CONFIRM,
                _confirm_mac(self._candidate_key, _CONFIRM_TAG_B, self._transcript_digest(upto=4)),
            )
            self.verdict = VerifierVerdict(accepted=True, retained=self.retained)
            self.done = True
        else:
            self._abort(AbortReason.PHASE_VIOLATION)


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def pump_pair(sess_a, sess_b, pair: InProcessPair, max_rounds: int = 64) -> None:
    """Shuttle frames between two in-process sessions until both finish."""
    for _ in range(max_rounds):
        progress = False
        for frame in sess_a.take_outgoing():
            pair.a.send_frame(frame)
            progress = True
        while True:
            frame = pair.b.poll()
            if frame is None:
                break
            sess_b.receive(frame)
            progress = True
        for frame in sess_b.take_outgoing():
            pair.b.send_frame(frame)
            progress = True
        while True:
            frame = pair.a.poll()
            if frame is None:
                break
            sess_a.receive(frame)
            progress = True
        if sess_a.done and sess_b.done and not sess_a._outbox and not sess_b._outbox:
            return
        if not progress:
            raise ProtocolError("protocol deadlock: no session can make progress")
    raise ProtocolError("protocol did not terminate")


def one_party_run(
    prover: OnePartyProver, verifier: OnePartyVerifier, pair: InProcessPair | None = None
) -> VerifierVerdict:
    """Run the one-party protocol to completion over an in-process pair."""
    if pair is None:
        pair = InProcessPair()
    prover.start()
    pump_pair(prover, verifier, pair)
    return verifier.verdict


def two_party_run(
    initiator: TwoPartyInitiator,
    responder: TwoPartyResponder,
    pair: InProcessPair | None = None,
) -> TwoPartyResult:
    """Run the two-party protocol to completion over an in-process pair."""
    if pair is None:
        pair = InProcessPair()
    initiator.start()
    pump_pair(initiator, responder, pair)
    return TwoPartyResult(
        verdict_a=initiator.verdict,
        verdict_b=responder.verdict,
        key_a=initiator.session_key,
        key_b=responder.session_key,
    )


def drive(session, transport) -> None:
    """Drive one session over a frame transport (e.g. TCP) to completion."""
    if hasattr(session, "start") and getattr(session, "phase", None) in (
        _ProverPhase.START,
        _InitiatorPhase.START,
    ):
        session.start()
    while True:
        for frame in session.take_outgoing():
            transport.send_frame(frame)
        if session.done:
            break
        session.receive(transport.recv_frame())
    for frame in session.take_outgoing():
        transport.send_frame(frame)


def dump_transcript(session) -> str:
    """Transcript dump: one hex-encoded frame per line (golden-file format)."""
    return "\n".join(frame.hex() for frame in session.transcript) + "\n"


def instrumented_costs(
    initiator: TwoPartyInitiator, responder: TwoPartyResponder
) -> dict[tuple[str, str], OpCounter]:
    """Run a two-party session and tabulate per-(party, phase) group-op
    counts covering chameleon parameter generation/checking and the key
    share, the paper's accounting scope."""
    result = two_party_run(initiator, responder)
    if not (result.verdict_a.accepted and result.verdict_b.accepted):
        raise ProtocolError("instrumented run did not complete successfully")
    table: dict[tuple[str, str], OpCounter] = {}
    for phase in ("round1", "round2", "session"):
        table[("A", phase)] = initiator.phase_costs.get(phase, OpCounter()).snapshot()
        table[("B", phase)] = responder.phase_costs.get(phase, OpCounter()).snapshot()
    table[("A", "total")] = sum(
        (table[("A", p)] for p in ("round1", "round2", "session")), OpCounter()
    )
    table[("B", "total")] = sum(
        (table[("B", p)] for p in ("round1", "round2", "session")), OpCounter()
    )
    return table
