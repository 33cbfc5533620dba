"""Shared PASS/FAIL ledger for the acceptance run (printed in the pytest summary)."""

ACCEPTANCE: dict = {}


def record(number: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE[number] = (status, detail)
    print(f"criterion {number:2d}: {status} {detail}")
