# lunarnet/simkernel/trace.py
import json
from typing import Any, Dict, IO, Iterable, Iterator, List, Optional


def _default(value: Any) -> Any:
    if isinstance(value, (bytes, bytearray)):
        return value.hex()
    if hasattr(value, "item"):  # numpy scalars
        return value.item()
    if hasattr(value, "value"):  # enums
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not trace-serializable")


def dumps_record(record: Dict[str, Any]) -> str:
    """Canonical one-line JSON for a trace record."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"), default=_default)


class Trace:
    """JSON-Lines trace.

    Records are kept as the parsed form of their canonical line, so the
    in-memory view equals what a reader of the written file gets back.
    """

    def __init__(self, sink: Optional[IO[str]] = None):
        self.lines: List[str] = []
        self.records: List[Dict[str, Any]] = []
        self.sink = sink

    def append(self, record: Dict[str, Any]) -> None:
        line = dumps_record(record)
        self.lines.append(line)
        self.records.append(json.loads(line))
        if self.sink is not None:
            self.sink.write(line + "\n")

    def of_kind(self, *kinds: str) -> List[Dict[str, Any]]:
        wanted = set(kinds)
        return [r for r in self.records if r["kind"] in wanted]

    def to_jsonl(self) -> str:
        return "".join(line + "\n" for line in self.lines)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Dict[str, Any]]:
        return iter(self.records)


def load_jsonl(lines: Iterable[str]) -> List[Dict[str, Any]]:
    """Parse trace lines back into records, skipping blank lines."""
    return [json.loads(line) for line in lines if line.strip()]
