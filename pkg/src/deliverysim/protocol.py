"""Wire protocol: length-prefixed UTF-8 JSON frames over TCP.

Frame layout: 4-byte big-endian payload length, then the JSON body.  Every
message carries an envelope {"v", "id", "kind"}; ids are monotone per sender
per connection, and server replies echo the request id in "re".
"""

from __future__ import annotations

import json
import socket
import struct

PROTOCOL_VERSION = 1
DEFAULT_PORT = 7483
HEADER_SIZE = 4
MAX_FRAME = 8 * 1024 * 1024

CLIENT_KINDS = ("hello", "asset_request", "command", "parse_report")
SERVER_KINDS = ("task_offer", "asset_payload", "command_result",
                "observation_payload", "episode_end", "error")


class ProtocolError(ValueError):
    pass


class ConnectionClosed(ConnectionError):
    pass


def encode_frame(message: dict) -> bytes:
    body = json.dumps(message, separators=(",", ":")).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise ProtocolError(f"frame of {len(body)} bytes exceeds the {MAX_FRAME} cap")
    return struct.pack(">I", len(body)) + body


def read_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            raise ConnectionClosed("peer closed the connection")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> dict:
    header = read_exact(sock, HEADER_SIZE)
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME:
        raise ProtocolError(f"declared frame length {length} exceeds the {MAX_FRAME} cap")
    body = read_exact(sock, length)
    try:
        message = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"frame body is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError("frame body must be a JSON object")
    return message


def send_message(sock: socket.socket, message: dict):
    sock.sendall(encode_frame(message))


def make_message(kind: str, msg_id: int, **payload) -> dict:
    return {"v": PROTOCOL_VERSION, "id": msg_id, "kind": kind, **payload}


def validate_client_message(message: dict, last_id: int) -> int:
    """Envelope checks for a client frame; returns the new message id."""
    if message.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"protocol version mismatch: got {message.get('v')!r}, "
                            f"need {PROTOCOL_VERSION}")
    msg_id = message.get("id")
    if not isinstance(msg_id, int):
        raise ProtocolError("message id must be an integer")
    if msg_id <= last_id:
        raise ProtocolError(f"message ids must be monotone (got {msg_id} after {last_id})")
    return msg_id
