"""Process entry point: one JSON message per stdin line, one reply per
stdout line. Real stdout is reserved for the protocol; anything user code
or a library prints outside the captured execute window goes to stderr.
"""

from __future__ import annotations

import json
import sys


def main() -> None:
    wire = sys.stdout
    sys.stdout = sys.stderr

    from .kernel import SidecarKernel  # after the stream swap; imports may print

    kernel = SidecarKernel()
    stdin = sys.stdin
    while True:
        try:
            line = stdin.readline()
        except KeyboardInterrupt:
            # an interrupt that raced past the execute it targeted
            continue
        if line == "":
            return
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = {
                "op": "error",
                "id": None,
                "error": {"type": "ProtocolError", "message": f"bad json: {exc}"},
            }
        else:
            try:
                reply = kernel.handle_message(msg)
            except BaseException as exc:  # never exit on a bad message
                reply = {
                    "op": "error",
                    "id": msg.get("id") if isinstance(msg, dict) else None,
                    "error": {"type": type(exc).__name__, "message": str(exc)},
                }
        wire.write(json.dumps(reply) + "\n")
        wire.flush()


if __name__ == "__main__":
    main()
