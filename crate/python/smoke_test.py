"""Smoke test for the `eas` extension module.

Build and install first:
    pip install maturin
    pip install --no-build-isolation ./crates/python
"""

import pathlib
import sys
import tempfile

import eas

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def main():
    tax = eas.Taxonomy.load(FIXTURES / "seed_taxonomy.json")
    assert "GW11A" in tax and "GW14A" not in tax
    assert len(tax) == len(tax.codes())

    chunks = eas.chunk_text((FIXTURES / "dialogue16.txt").read_text())
    assert len(chunks) == 8, chunks

    raw = (FIXTURES / "dialogue16_raw.txt").read_text()
    records = eas.parse_response(raw)
    assert len(records) == 8
    assert sum(len(r.findings) for r in records) == 25
    assert records[3].no_errors_declared

    probe = eas.parse_response(
        "OT: We will first to see him.\n"
        "Corrected: We will first see him.\n"
        "1st Error & Reason: GW14B, first to see, Incorrect verb pattern\n"
    )[0]
    annotated, statuses = eas.resolve(tax, probe)
    assert statuses[0]["status"] == "unknown_code", statuses
    assert annotated.findings[0].status == "unknown_code"

    golden = (FIXTURES / "golden_output.txt").read_text()
    report = eas.score(golden, (FIXTURES / "dialogue16_gold.json").read_text())
    v = report["verdicts"]
    assert (v["correct"], v["partial"], v["incorrect"]) == (27, 3, 2), v

    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp) / "out.txt"
        run = eas.analyze(
            FIXTURES / "seed_taxonomy.json",
            FIXTURES / "dialogue16.txt",
            out,
            FIXTURES / "dialogue16_responses.json",
            parallelism=4,
        )
        assert out.read_text() == golden
        assert len(run["chunks"]) == 8

    try:
        eas.parse_response("OT: a\n1st Error & Reason: GW1A, a, b\n")
    except ValueError as e:
        print("parse error surfaced:", e)
    else:
        raise AssertionError("malformed response parsed")

    print(f"eas {eas.__version__}: smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
