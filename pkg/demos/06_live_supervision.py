"""Driving a live session over the wire protocol.

Starts a supervisory server in-process, connects as a client, toggles a
layer, injects a child event, steps the paused engine, and prints the
telemetry that comes back: the same conversation a browser console has.
"""

import asyncio
import json

from lively import default_config, default_platform
from lively.engine import Engine
from lively.service import SupervisoryServer


async def main():
    engine = Engine(default_config(), default_platform(), seed=5)
    server = SupervisoryServer(engine, paused=True)
    host, port = await server.start("127.0.0.1", 0)
    print(f"server listening on {host}:{port}\n")

    reader, writer = await asyncio.open_connection(host, port)

    async def command(**msg):
        print(f">> {msg}")
        writer.write(json.dumps(msg).encode() + b"\n")
        await writer.drain()

    async def reply():
        msg = json.loads(await reader.readline())
        if msg["type"] == "telemetry":
            f = msg["frame"]
            layers = ",".join(k for k, v in f["enabled"].items() if v)
            reqs = [(r["source"], r["payload"]["type"]) for r in f["surviving_requests"]]
            print(f"<< tick {f['tick']}: enabled=[{layers}] requests={reqs}")
        else:
            print(f"<< {msg}")
        return msg

    await command(type="query_state", cmd_id="hello")
    await reply(); await reply()

    await command(type="set_layer", layer="eye_blink", enabled=False, cmd_id="no-blink")
    await reply()

    await command(type="inject", cmd_id="smile",
                  event={"type": "emotion_display", "valence": 0.8, "arousal": 0.6, "label": "smile"})
    await reply()

    await command(type="step", n=3, cmd_id="go")
    await reply()
    for _ in range(3):
        await reply()

    writer.close()
    await server.stop()
    print("\nevery command above landed at a tick boundary; the session log is "
          f"replayable ({len(server.records)} records captured)")


asyncio.run(main())
