"""RSVP session logic: presentation plans, response attribution, selection,
and next-iteration seeding.

The server is the timing authority: attribution uses the plan's onsets, so
the selected set is a pure function of (plan, responses, rule). The viewer's
measured onsets are stored for skew logging only, never corrected. Every
session is reproducible from its log alone: plans derive from the session
seed through fixed Philox substreams, and selected pictures continue their
own sequence tokens.
"""

from __future__ import annotations

import math
import secrets
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import save_record
from .generator import GenConfig, SeedToken, run_sequence

MIN_SOA_MS = 100.0
MAX_SOA_MS = 1000.0
SEED_SALT = 0x5E55_10F5


class SessionError(Exception):
    pass


class UnknownSessionError(SessionError):
    pass


class PhaseViolationError(SessionError):
    pass


class EmptySelectionError(SessionError):
    pass


@dataclass(frozen=True)
class SelectionRule:
    """Attribute a keypress to the latest picture whose onset window
    contains it."""

    window_ms: float = 600.0

    def validate(self, soa_ms: float) -> None:
        if not 0.0 < self.window_ms <= 3.0 * soa_ms:
            raise SessionError(
                f"window {self.window_ms} ms outside (0, 3 x {soa_ms}] ms"
            )


@dataclass(frozen=True)
class PlanEntry:
    index: int
    token: SeedToken
    onset_ms: float


@dataclass(frozen=True)
class ResponseEvent:
    onset_index: int  # picture the viewer believed was showing
    t_response_ms: float
    key: str


@dataclass
class Session:
    id: str
    config: GenConfig
    seed: int
    soa_ms: float
    rule: SelectionRule
    plan: tuple[PlanEntry, ...]
    phase: str = "presenting"
    responses: list[ResponseEvent] = field(default_factory=list)
    measured_onsets_ms: Optional[tuple[float, ...]] = None
    selected_computed: Optional[tuple[int, ...]] = None
    selected_final: Optional[tuple[int, ...]] = None
    new_tokens: tuple[SeedToken, ...] = ()


def picture_seed(session_seed: int, index: int) -> int:
    """Deterministic child seed for the index-th picture of a session."""
    bits = np.random.Philox(
        key=np.array([session_seed, SEED_SALT], dtype=np.uint64),
        counter=np.array([0, 0, 0, index], dtype=np.uint64),
    )
    return int(bits.random_raw())


def create_session(
    config: GenConfig,
    seed: int,
    n_pictures: int,
    soa_ms: float,
    picture_iterations: int = 6,
    rule: Optional[SelectionRule] = None,
    session_id: Optional[str] = None,
) -> Session:
    """A plan of n_pictures independent seeded sequences at fixed SOA.

    Deterministic given (config, seed, n_pictures, soa_ms,
    picture_iterations) except for the opaque session id.
    """
    if n_pictures < 1:
        raise SessionError("need at least one picture")
    if not MIN_SOA_MS <= soa_ms <= MAX_SOA_MS:
        raise SessionError(
            f"soa {soa_ms} ms outside [{MIN_SOA_MS}, {MAX_SOA_MS}] ms"
        )
    if picture_iterations < 1:
        raise SessionError("picture_iterations must be >= 1")
    rule = rule or SelectionRule()
    rule.validate(soa_ms)
    plan = tuple(
        PlanEntry(
            index=k,
            token=SeedToken(picture_seed(seed, k), picture_iterations),
            onset_ms=k * soa_ms,
        )
        for k in range(n_pictures)
    )
    return Session(
        id=session_id or secrets.token_hex(8),
        config=config,
        seed=seed,
        soa_ms=soa_ms,
        rule=rule,
        plan=plan,
    )


def picture_state(session: Session, index: int):
    entry = session.plan[index]
    return run_sequence(session.config, entry.token.seed, entry.token.iteration)


def record_response(
    session: Session, onset_index: int, t_response_ms: float, key: str
) -> Session:
    if session.phase != "presenting":
        raise PhaseViolationError(f"cannot record responses in phase {session.phase}")
    if not math.isfinite(t_response_ms):
        raise SessionError("response timestamp must be finite")
    session.responses.append(ResponseEvent(onset_index, t_response_ms, key))
    return session


def attribute_responses(
    plan: Sequence[PlanEntry], responses: Sequence[ResponseEvent], rule: SelectionRule
) -> tuple[int, ...]:
    """Selected picture indexes: for each response, the latest planned onset
    whose window contains it; presses before the first onset stay
    unattributed. Duplicate attributions collapse."""
    selected = set()
    for response in responses:
        best = None
        for entry in plan:
            if entry.onset_ms <= response.t_response_ms < entry.onset_ms + rule.window_ms:
                if best is None or entry.onset_ms > best.onset_ms:
                    best = entry
        if best is not None:
            selected.add(best.index)
    return tuple(sorted(selected))


def finish_session(
    session: Session, measured_onsets_ms: Optional[Sequence[float]] = None
) -> tuple[int, ...]:
    if session.phase != "presenting":
        raise PhaseViolationError(f"cannot finish in phase {session.phase}")
    if measured_onsets_ms is not None:
        if len(measured_onsets_ms) > len(session.plan):
            raise SessionError("more measured onsets than planned pictures")
        session.measured_onsets_ms = tuple(float(t) for t in measured_onsets_ms)
    session.selected_computed = attribute_responses(
        session.plan, session.responses, session.rule
    )
    session.phase = "reviewing"
    return session.selected_computed


def onset_skew_ms(session: Session) -> tuple[float, ...]:
    """Measured minus planned onset, for logging only."""
    if session.measured_onsets_ms is None:
        return ()
    t0 = session.measured_onsets_ms[0]
    return tuple(
        (t - t0) - entry.onset_ms
        for t, entry in zip(session.measured_onsets_ms, session.plan)
    )


def iterate_from_selection(
    session: Session, selected_override: Optional[Sequence[int]] = None
) -> tuple[SeedToken, ...]:
    """Continue every selected picture's sequence by one iteration."""
    if session.phase != "reviewing":
        raise PhaseViolationError(f"cannot iterate in phase {session.phase}")
    selected = (
        tuple(sorted(set(selected_override)))
        if selected_override is not None
        else session.selected_computed
    )
    if not selected:
        raise EmptySelectionError("no pictures selected")
    if any(not 0 <= k < len(session.plan) for k in selected):
        raise SessionError("selection outside the presented plan")
    tokens = []
    for k in selected:
        entry = session.plan[k]
        tokens.append(SeedToken(entry.token.seed, entry.token.iteration + 1))
    session.selected_final = tuple(selected)
    session.new_tokens = tuple(tokens)
    session.phase = "iterated"
    return session.new_tokens


def session_log(session: Session) -> dict:
    return {
        "schema_version": 1,
        "kind": "session",
        "session_id": session.id,
        "seed": session.seed,
        "soa_ms": session.soa_ms,
        "window_ms": session.rule.window_ms,
        "phase": session.phase,
        "config": {
            "picture_width": session.config.picture_width,
            "picture_height": session.config.picture_height,
            "inset_ratio": session.config.inset_ratio,
            "generative_ratio": session.config.generative_ratio,
            "min_site_offset": session.config.min_site_offset,
            "f_min": session.config.f_min,
            "f_max": session.config.f_max,
            "background_luminance": session.config.background_luminance,
            "eye_distance": session.config.eye_distance,
        },
        "plan": [
            {
                "index": e.index,
                "seed": e.token.seed,
                "iteration": e.token.iteration,
                "onset_ms": e.onset_ms,
            }
            for e in session.plan
        ],
        "responses": [
            {
                "onset_index": r.onset_index,
                "t_response_ms": r.t_response_ms,
                "key": r.key,
            }
            for r in session.responses
        ],
        "measured_onsets_ms": list(session.measured_onsets_ms or ()),
        "onset_skew_ms": list(onset_skew_ms(session)),
        "selected_computed": list(session.selected_computed or ()),
        "selected_final": list(session.selected_final or ()),
        "new_tokens": [
            {"seed": t.seed, "iteration": t.iteration} for t in session.new_tokens
        ],
    }


def replay_session_log(log: dict) -> dict:
    """Recompute everything derivable from the log: the plan, the selected
    set, and the next-iteration dataset records, each byte-exact."""
    config = GenConfig(
        picture_width=int(log["config"]["picture_width"]),
        picture_height=int(log["config"]["picture_height"]),
        inset_ratio=float(log["config"]["inset_ratio"]),
        generative_ratio=float(log["config"]["generative_ratio"]),
        min_site_offset=float(log["config"]["min_site_offset"]),
        f_min=int(log["config"]["f_min"]),
        f_max=int(log["config"]["f_max"]),
        background_luminance=int(log["config"]["background_luminance"]),
        eye_distance=float(log["config"]["eye_distance"]),
    )
    plan = tuple(
        PlanEntry(
            int(e["index"]),
            SeedToken(int(e["seed"]), int(e["iteration"])),
            float(e["onset_ms"]),
        )
        for e in log["plan"]
    )
    for entry in plan:
        if picture_seed(int(log["seed"]), entry.index) != entry.token.seed:
            raise SessionError("plan does not match its seed")
    responses = [
        ResponseEvent(int(r["onset_index"]), float(r["t_response_ms"]), str(r["key"]))
        for r in log["responses"]
    ]
    rule = SelectionRule(window_ms=float(log["window_ms"]))
    selected = attribute_responses(plan, responses, rule)
    final = tuple(int(k) for k in log["selected_final"]) or selected
    records = {}
    for k in final:
        token = plan[k].token
        state = run_sequence(config, token.seed, token.iteration + 1)
        records[k] = save_record(state)
    return {"selected_computed": selected, "iterated_records": records}
