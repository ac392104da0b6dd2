#!/usr/bin/env python3
"""Independent encoder for the perch wire format.

Hand-written from the format description in docs/wire-format.md; shares no
code with the C++ library. Regenerates the golden files under tests/golden/.

Format recap:
  u8/u32/u64        big-endian fixed width
  i64               big-endian two's complement
  string/bytes      u32 length prefix + raw bytes
  digest32/pub32    raw 32 bytes
  sig64             raw 64 bytes
  map               u32 count + (key,value) string pairs, keys sorted byte-wise
  list<T>           u32 count + elements
  union             u8 tag + payload
  struct            fields in declared order, no field tags
"""

import os
import struct
import sys

OUT = os.path.join(os.path.dirname(__file__), "..", "golden")


def u8(v):
    return struct.pack(">B", v)


def u32(v):
    return struct.pack(">I", v)


def u64(v):
    return struct.pack(">Q", v)


def i64(v):
    return struct.pack(">q", v)


def var(b):
    if isinstance(b, str):
        b = b.encode("utf-8")
    return u32(len(b)) + b


def fixed(b, n):
    assert len(b) == n, (len(b), n)
    return bytes(b)


def kv_map(d):
    out = u32(len(d))
    for k in sorted(d.keys()):
        out += var(k) + var(d[k])
    return out


def financial_transaction(tx):
    return (
        fixed(tx["institution_id"], 32)
        + var(tx["account_id"])
        + i64(tx["amount"])
        + var(tx["currency"])
        + i64(tx["occurred_at"])
        + var(tx["description"])
        + var(tx["external_ref"])
    )


def signed_transaction(stx):
    return (
        financial_transaction(stx["tx"])
        + fixed(stx["institution_sig"], 64)
        + fixed(stx["customer_sig"], 64)
        + i64(stx["bcs_timestamp"])
        + fixed(stx["bcs_sig"], 64)
    )


ROLES = {"customer": 0, "institution": 1, "bcs": 2, "uas": 3, "reporting": 4}
ACTIONS = {"grant": 0, "revoke": 1}
SCOPES = {"submit-transactions": 0, "read-chain": 1}
ENTRY_TAGS = {"transaction": 0, "permission": 1, "certificate": 2}


def permission_record(r):
    return (
        fixed(r["subject_fingerprint"], 32)
        + u8(ACTIONS[r["action"]])
        + u8(SCOPES[r["scope"]])
        + fixed(r["issued_by"], 32)
        + i64(r["issued_at"])
        + fixed(r["uas_sig"], 64)
    )


def certificate(c):
    return (
        var(c["subject_id"])
        + u8(ROLES[c["role"]])
        + fixed(c["public_key"], 32)
        + kv_map(c["aux"])
        + i64(c["issued_at"])
        + i64(c["expires_at"])
        + fixed(c["issuer_fingerprint"], 32)
        + fixed(c["issuer_sig"], 64)
    )


def block_entry(e):
    kind, payload = e
    body = {
        "transaction": signed_transaction,
        "permission": permission_record,
        "certificate": certificate,
    }[kind](payload)
    return u8(ENTRY_TAGS[kind]) + body


def block_header(h):
    return (
        u64(h["height"])
        + fixed(h["prev_header_digest"], 32)
        + fixed(h["data_digest"], 32)
        + i64(h["created_at"])
        + fixed(h["creator_fingerprint"], 32)
        + fixed(h["creator_sig"], 64)
    )


def block(b):
    entries = u32(len(b["entries"]))
    for e in b["entries"]:
        entries += block_entry(e)
    return block_header(b["header"]) + entries


def pattern(seed, n):
    """Deterministic filler bytes so golden values exercise non-zero content."""
    return bytes((seed + 7 * i) % 256 for i in range(n))


def main():
    os.makedirs(OUT, exist_ok=True)

    zero_tx = {
        "institution_id": bytes(32),
        "account_id": "",
        "amount": 0,
        "currency": "",
        "occurred_at": 0,
        "description": "",
        "external_ref": "",
    }
    with open(os.path.join(OUT, "fintx_zero.bin"), "wb") as f:
        f.write(financial_transaction(zero_tx))

    sample_tx = {
        "institution_id": pattern(1, 32),
        "account_id": "acct-42",
        "amount": -125075,
        "currency": "USD",
        "occurred_at": 1704110400,
        "description": "card purchase — café",
        "external_ref": "bank-1001-17",
    }
    with open(os.path.join(OUT, "fintx_sample.bin"), "wb") as f:
        f.write(financial_transaction(sample_tx))

    stx = {
        "tx": sample_tx,
        "institution_sig": pattern(2, 64),
        "customer_sig": pattern(3, 64),
        "bcs_timestamp": 1704110461,
        "bcs_sig": pattern(4, 64),
    }
    record = {
        "subject_fingerprint": pattern(5, 32),
        "action": "grant",
        "scope": "submit-transactions",
        "issued_by": pattern(6, 32),
        "issued_at": 1704067200,
        "uas_sig": pattern(7, 64),
    }
    cert = {
        "subject_id": "First Example Bank",
        "role": "institution",
        "public_key": pattern(8, 32),
        "aux": {"api_token_ref": "vault:feb/7", "aaa": "first"},
        "issued_at": 1704067200,
        "expires_at": 1735689600,
        "issuer_fingerprint": pattern(9, 32),
        "issuer_sig": pattern(10, 64),
    }
    blk = {
        "header": {
            "height": 3,
            "prev_header_digest": pattern(11, 32),
            "data_digest": pattern(12, 32),
            "created_at": 1704110462,
            "creator_fingerprint": pattern(13, 32),
            "creator_sig": pattern(14, 64),
        },
        "entries": [
            ("certificate", cert),
            ("permission", record),
            ("transaction", stx),
        ],
    }
    with open(os.path.join(OUT, "block_sample.bin"), "wb") as f:
        f.write(block(blk))

    print("golden files written to", os.path.abspath(OUT))
    return 0


if __name__ == "__main__":
    sys.exit(main())
