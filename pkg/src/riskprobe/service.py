"""Websocket streaming endpoint for the companion UI.

One scenario session per connection: each client gets its own world, so
concurrent sessions are fully independent, and a disconnect simply ends
(pauses) that world. The world advances at the planner cadence (10 Hz wall
clock); inbound commands land in a latest-wins mailbox read once per cycle.

Outbound messages never block the cycle: they pass through a bounded buffer
(depth 16) that drops oldest first when the client stalls.

Message schema (all floats SI units unless suffixed):

  hello (once per session):
    {"type": "hello", "version": 1, "scenario": str,
     "map": {"lanes": [{"id": str, "points": [[x_m, y_m], ...]}]},
     "cycle_rate_hz": 10.0, "n_t": int,
     "color_thresholds_pct_per_s": {"blue_below": 0.5, "red_at_or_above": 1.0}}

  state (one per cycle):
    {"type": "state", "version": 1, "t_s": float, "paused": bool,
     "vehicles": [{"id": str, "x_m": float, "y_m": float, "v_ms": float,
                   "heading_rad": float, "is_ego": bool}],
     "velocity_scale": {"v0_ms": float, "v_tar_ms": float},
     "direction": "left"|"straight"|"right",
     "warning": {"speed": "accelerate"|"brake"|"keep",
                 "direction": str, "magnitude_ms": float},
     "ego_trajectory": [[x_m, y_m], ...],     # chosen prediction, thinned
     "other_trajectories": {id: [[x_m, y_m], ...]},
     "risk_field": {.. same block as riskfield.jsonl ..}}

  inbound command:
    {"type": "command", "version": 1, "accel_ms2": float,
     "lane_request": "left"|"right"|null, "pause": bool, "reset": bool}

Malformed inbound messages are ignored with a logged warning.
"""

from __future__ import annotations

import asyncio
import collections
import dataclasses
import json
import logging

from .motion import predict_other
from .sim import CYCLE_RATE_HZ, EgoCommand, Scenario, TraceRecord, World, risk_field_block

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
SEND_BUFFER_DEPTH = 16
TRAJECTORY_THIN_STEP = 5  # every 0.5 s of the prediction


def hello_message(scenario: Scenario, world: World) -> dict:
    lanes = []
    for node in world.graph.nodes.values():
        if "centerline" in node.attributes:
            lanes.append({"id": node.id, "points": node.attributes["centerline"]})
    return {
        "type": "hello",
        "version": PROTOCOL_VERSION,
        "scenario": scenario.name,
        "map": {"lanes": lanes},
        "cycle_rate_hz": CYCLE_RATE_HZ,
        "n_t": world.params.probe.n_t,
        "accel_bounds_ms2": {"min": world.params.probe.a_min, "max": world.params.probe.a_max},
        "color_thresholds_pct_per_s": {"blue_below": 0.5, "red_at_or_above": 1.0},
    }


def state_message(record: TraceRecord, paused: bool, ego_trajectory=None, other_trajectories=None) -> dict:
    return {
        "type": "state",
        "version": PROTOCOL_VERSION,
        "t_s": round(record.t, 3),
        "paused": paused,
        "vehicles": [
            {"id": vid, "x_m": s["x"], "y_m": s["y"], "v_ms": s["v"],
             "heading_rad": s["heading"], "is_ego": s["is_ego"]}
            for vid, s in sorted(record.states.items())
        ],
        "velocity_scale": {"v0_ms": record.v_0, "v_tar_ms": record.v_tar},
        "direction": record.direction,
        "warning": {"speed": record.speed_advice, "direction": record.direction,
                    "magnitude_ms": record.magnitude},
        "ego_trajectory": ego_trajectory or [],
        "other_trajectories": other_trajectories or {},
        "risk_field": risk_field_block(record),
    }


def parse_command(raw: str):
    """Validate an inbound message into (EgoCommand, pause, reset).

    Returns None (and logs a warning) when the message is malformed.
    """
    try:
        doc = json.loads(raw)
        if doc.get("type") != "command":
            raise ValueError(f"unexpected type {doc.get('type')!r}")
        lane_request = doc.get("lane_request")
        if lane_request not in (None, "left", "right"):
            raise ValueError(f"bad lane_request {lane_request!r}")
        command = EgoCommand(
            accel=float(doc.get("accel_ms2", 0.0)),
            lane_request=lane_request,
        )
        return command, bool(doc.get("pause", False)), bool(doc.get("reset", False))
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        logger.warning("ignoring malformed inbound message: %s", exc)
        return None


class Session:
    """One connection: own world, command mailbox, bounded send buffer."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.world = World(scenario)
        self.paused = False
        self.buffer: collections.deque[str] = collections.deque(maxlen=SEND_BUFFER_DEPTH)
        self.buffer_event = asyncio.Event()

    def apply(self, parsed) -> None:
        command, pause, reset = parsed
        if reset:
            self.world.reset()
            self.paused = False
            return
        self.paused = pause
        self.world.set_command(command)

    def enqueue(self, message: dict) -> None:
        self.buffer.append(json.dumps(message, separators=(",", ":")))
        self.buffer_event.set()

    def cycle(self) -> None:
        if self.world.t >= self.scenario.duration_s - 1e-9:
            self.paused = True  # scenario finished; reset restarts it
        if self.paused:
            return
        record = self.world.step()
        # attach the chosen and predicted trajectories for the scene view
        ego_trajectory = None
        committed = self.world.hysteresis.committed
        if committed is not None:
            sample = committed.samples.get(committed.chosen)
            if sample is not None:
                ego_trajectory = sample.positions[::TRAJECTORY_THIN_STEP].round(3).tolist()
        self.enqueue(state_message(record, self.paused, ego_trajectory, self._other_trajectories()))

    def _other_trajectories(self) -> dict:
        from .rldm import project_to_path

        out = {}
        cfg = self.world.params.probe
        for vid, state in self.world._vehicles.items():
            if vid == self.scenario.ego_id:
                continue
            truth = self.world._true_state(vid, state)
            arc = project_to_path(truth.position, state["path"]).arclength
            annotated = dataclasses.replace(truth, path=state["path"], arc_position=arc)
            sample = predict_other(annotated, cfg)
            out[vid] = sample.positions[::TRAJECTORY_THIN_STEP].round(3).tolist()
        return out


async def handle_connection(websocket, scenario: Scenario):
    session = Session(scenario)
    session.enqueue(hello_message(scenario, session.world))
    logger.info("session started: scenario %s", scenario.name)

    async def reader():
        async for raw in websocket:
            parsed = parse_command(raw)
            if parsed is not None:
                session.apply(parsed)

    async def writer():
        while True:
            await session.buffer_event.wait()
            session.buffer_event.clear()
            while session.buffer:
                await websocket.send(session.buffer.popleft())

    async def ticker():
        period = 1.0 / CYCLE_RATE_HZ
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while True:
            session.cycle()
            next_tick += period
            await asyncio.sleep(max(0.0, next_tick - loop.time()))

    tasks = [asyncio.create_task(c) for c in (reader(), writer(), ticker())]
    try:
        done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
        for task in pending:
            task.cancel()
        for task in done:
            exc = task.exception()
            if exc is not None and not isinstance(exc, Exception):
                raise exc
    finally:
        for task in tasks:
            task.cancel()
        logger.info("session ended at t=%.1f s", session.world.t)


def serve(scenario: Scenario, host: str = "127.0.0.1", port: int = 8700) -> None:
    """Run the websocket endpoint until interrupted."""
    import websockets

    async def main():
        async with websockets.serve(lambda ws: handle_connection(ws, scenario), host, port):
            logger.info("serving on ws://%s:%d (scenario %s)", host, port, scenario.name)
            await asyncio.Future()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
