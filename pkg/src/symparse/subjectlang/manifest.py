"""Subject manifests: line-oriented ``key = value`` files next to a ``.mini`` source."""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .syntax import parse_subject


class ManifestError(Exception):
    pass


@dataclass
class Manifest:
    source: str
    entry: str = "main"
    max_input_len: int = 64
    loop_bound: int = 4
    recursion_bound: int = 3
    tokenizer: str | None = None
    # where the tokenizer leaves the token identifier: "global" or "return"
    tokenizer_sink_kind: str = "global"
    tokenizer_sink: str | None = None
    # global holding the input cursor; the token instance is input[0:cursor]
    tokenizer_cursor: str | None = None
    tokenizer_enum: str | None = None
    tokenizer_loop_bound: int | None = None
    tokenizer_samples: int = 10
    # input-length bound for the isolated tokenizer run
    tokenizer_max_input_len: int = 8
    golden: str | None = None
    max_states: int = 2_000_000
    description: str = ""
    path: Path | None = None

    @property
    def name(self):
        return Path(self.source).stem

    def source_path(self):
        base = self.path.parent if self.path else Path(".")
        return base / self.source

    def golden_path(self):
        if self.golden is None:
            return None
        base = self.path.parent if self.path else Path(".")
        return base / self.golden

    def load_program(self):
        text = self.source_path().read_text()
        return parse_subject(text, entry=self.entry, tokenizer=self.tokenizer)


_INT_KEYS = {"max_input_len", "loop_bound", "recursion_bound",
             "tokenizer_loop_bound", "tokenizer_samples", "max_states",
             "tokenizer_max_input_len"}


def parse_manifest(text, path=None):
    known = {f.name for f in fields(Manifest)} - {"path"}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ManifestError(f"line {lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            try:
                value = int(value)
            except ValueError:
                raise ManifestError(f"line {lineno}: {key} must be an integer")
        values[key] = value
    if "source" not in values:
        raise ManifestError("manifest lacks 'source'")
    m = Manifest(**values, path=Path(path) if path else None)
    if m.tokenizer and not m.tokenizer_sink and m.tokenizer_sink_kind == "global":
        raise ManifestError("tokenizer declared without tokenizer_sink")
    return m


def load_manifest(path):
    """Load a manifest; a bare ``.mini`` path gets a default manifest."""
    path = Path(path)
    if path.suffix == ".mini":
        sidecar = path.with_suffix(".manifest")
        if sidecar.exists():
            return parse_manifest(sidecar.read_text(), sidecar)
        return Manifest(source=path.name, path=path)
    return parse_manifest(path.read_text(), path)
