"""Binary ROM artifacts.

Layout: an 8-byte magic, ``u32`` version, ``u32`` kind, ``u32`` section count,
then tagged sections ``(4-byte tag, u64 length, payload)``.  All integers and
floats are little-endian; arrays are ``<f8`` in C order.  Writing the same
object twice gives identical bytes.
"""

from __future__ import annotations

import enum
import io as _io
import struct
from typing import Union

import numpy as np
from numpy.typing import NDArray

from .errors import IngestionError
from .io import atomic_write_bytes
from .rbf import FitStatus, Kernel, RbfKernelSpec, RbfNetwork
from .rom_ksnn import PodKsnnOffline
from .rom_nn import GlobalBasis, PodNnRom, ReducedRegressor, RegressorKind
from .subspace import OrthonormalBasis

MAGIC = b"SDALROM\x00"
VERSION = 1


class RomKind(enum.IntEnum):
    POD_KSNN = 1
    POD_NN = 2

    @property
    def label(self) -> str:
        return {1: "POD-KSNN", 2: "POD-NN"}[int(self)]

    @classmethod
    def parse(cls, value) -> "RomKind":
        if isinstance(value, RomKind):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for k in cls:
            if k.label.lower() == key:
                return k
        raise ValueError(f"unknown ROM kind {value!r}; expected 'pod-ksnn' or 'pod-nn'")


RomArtifact = Union[PodKsnnOffline, PodNnRom]


def kind_of(rom: RomArtifact) -> RomKind:
    if isinstance(rom, PodKsnnOffline):
        return RomKind.POD_KSNN
    if isinstance(rom, PodNnRom):
        return RomKind.POD_NN
    raise TypeError(f"not a ROM artifact: {type(rom).__name__}")


class _Writer:
    def __init__(self):
        self.buf = _io.BytesIO()

    def u32(self, v: int):
        self.buf.write(struct.pack("<I", int(v)))

    def u64(self, v: int):
        self.buf.write(struct.pack("<Q", int(v)))

    def f64(self, v: float):
        self.buf.write(struct.pack("<d", float(v)))

    def array(self, a: NDArray):
        a = np.ascontiguousarray(a, dtype="<f8")
        self.u32(a.ndim)
        for s in a.shape:
            self.u64(s)
        self.buf.write(a.tobytes())

    def bytes(self) -> bytes:
        return self.buf.getvalue()


class _Reader:
    def __init__(self, data: bytes, what: str):
        self.data = memoryview(data)
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IngestionError(f"truncated {self.what}")
        out = bytes(self.data[self.pos : self.pos + n])
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def array(self) -> NDArray[np.float64]:
        ndim = self.u32()
        if ndim > 8:
            raise IngestionError(f"corrupt array header in {self.what}")
        shape = tuple(self.u64() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)

    def done(self):
        if self.pos != len(self.data):
            raise IngestionError(f"trailing bytes in {self.what}")


def network_to_bytes(net: RbfNetwork) -> bytes:
    """Kernel id, fit status, ridge, condition, then centers, widths and weights."""
    w = _Writer()
    w.u32(net.kind.code)
    w.u32(0 if net.status is FitStatus.INTERPOLATION else 1)
    w.f64(net.ridge)
    w.f64(net.condition)
    w.array(net.centers)
    w.array(net.widths)
    w.array(net.weights)
    return w.bytes()


def network_from_bytes(data: bytes) -> RbfNetwork:
    r = _Reader(data, "kernel network section")
    code = r.u32()
    if code > 2:
        raise IngestionError(f"unknown kernel id {code}")
    status = FitStatus.INTERPOLATION if r.u32() == 0 else FitStatus.REGRESSION
    ridge, cond = r.f64(), r.f64()
    centers, widths, weights = r.array(), r.array(), r.array()
    r.done()
    return RbfNetwork(centers, widths, weights, Kernel.from_code(code), status, ridge, cond)


def _section(tag: bytes, payload: bytes) -> bytes:
    return tag + struct.pack("<Q", len(payload)) + payload


def _ksnn_sections(rom: PodKsnnOffline) -> list[bytes]:
    meta = _Writer()
    meta.u64(rom.n_dofs)
    meta.f64(rom.energy_criterion)
    meta.u32(rom.time_kernel.kind.code)
    meta.f64(rom.time_kernel.width)
    grid = _Writer()
    grid.array(rom.time_grid)
    return [
        _section(b"META", meta.bytes()),
        _section(b"GRID", grid.bytes()),
        _section(b"RBFN", network_to_bytes(rom.mu_net)),
    ]


def _nn_sections(rom: PodNnRom) -> list[bytes]:
    basis = _Writer()
    basis.f64(rom.basis.energy_criterion)
    basis.array(rom.basis.columns)
    basis.array(rom.basis.singular_values)
    reg = _Writer()
    reg.u32(0 if rom.regressor.kind is RegressorKind.RBF else 1)
    reg.array(rom.regressor.input_lo)
    reg.array(rom.regressor.input_hi)
    grid = _Writer()
    grid.array(rom.time_grid)
    out = [_section(b"GRID", grid.bytes()), _section(b"BASS", basis.bytes()), _section(b"REGR", reg.bytes())]
    if rom.regressor.kind is RegressorKind.RBF:
        out.append(_section(b"RBFN", network_to_bytes(rom.regressor.model)))
    else:
        mlp = _Writer()
        model = rom.regressor.model
        mlp.u32(len(model.weights))
        for wt, b in zip(model.weights, model.biases):
            mlp.array(wt)
            mlp.array(b)
        out.append(_section(b"MLPN", mlp.bytes()))
    return out


def artifact_to_bytes(rom: RomArtifact) -> bytes:
    kind = kind_of(rom)
    sections = _ksnn_sections(rom) if kind is RomKind.POD_KSNN else _nn_sections(rom)
    head = MAGIC + struct.pack("<III", VERSION, int(kind), len(sections))
    return head + b"".join(sections)


def _split_sections(data: bytes) -> tuple[RomKind, dict[bytes, bytes]]:
    if len(data) < len(MAGIC) + 12 or data[: len(MAGIC)] != MAGIC:
        raise IngestionError("not a ROM artifact (bad magic)")
    version, kind, count = struct.unpack_from("<III", data, len(MAGIC))
    if version != VERSION:
        raise IngestionError(f"unsupported artifact version {version}")
    try:
        rk = RomKind(kind)
    except ValueError:
        raise IngestionError(f"unknown artifact kind {kind}") from None
    pos = len(MAGIC) + 12
    sections: dict[bytes, bytes] = {}
    for _ in range(count):
        if pos + 12 > len(data):
            raise IngestionError("truncated artifact section header")
        tag = data[pos : pos + 4]
        (length,) = struct.unpack_from("<Q", data, pos + 4)
        pos += 12
        if pos + length > len(data):
            raise IngestionError(f"truncated artifact section {tag!r}")
        sections[tag] = data[pos : pos + length]
        pos += length
    if pos != len(data):
        raise IngestionError("trailing bytes after artifact sections")
    return rk, sections


def _need(sections: dict[bytes, bytes], tag: bytes) -> bytes:
    if tag not in sections:
        raise IngestionError(f"artifact lacks section {tag.decode()}")
    return sections[tag]


def artifact_from_bytes(data: bytes) -> RomArtifact:
    kind, sections = _split_sections(data)
    g = _Reader(_need(sections, b"GRID"), "grid section")
    grid = g.array()
    g.done()
    if kind is RomKind.POD_KSNN:
        m = _Reader(_need(sections, b"META"), "metadata section")
        n_dofs, eta = m.u64(), m.f64()
        tkernel = RbfKernelSpec(Kernel.from_code(m.u32()), m.f64())
        m.done()
        net = network_from_bytes(_need(sections, b"RBFN"))
        return PodKsnnOffline(net, grid, n_dofs, eta, tkernel)
    b = _Reader(_need(sections, b"BASS"), "basis section")
    eta = b.f64()
    cols, sv = b.array(), b.array()
    b.done()
    gb = GlobalBasis(OrthonormalBasis(cols), sv, eta)
    r = _Reader(_need(sections, b"REGR"), "regressor section")
    rkind = RegressorKind.RBF if r.u32() == 0 else RegressorKind.MLP
    lo, hi = r.array(), r.array()
    r.done()
    if rkind is RegressorKind.RBF:
        model = network_from_bytes(_need(sections, b"RBFN"))
    else:
        from .mlp import MlpModel

        mr = _Reader(_need(sections, b"MLPN"), "mlp section")
        layers = [(mr.array(), mr.array()) for _ in range(mr.u32())]
        mr.done()
        model = MlpModel(tuple(w for w, _ in layers), tuple(bb for _, bb in layers))
    return PodNnRom(gb, ReducedRegressor(rkind, model, lo, hi), grid)


def save_artifact(path, rom: RomArtifact) -> None:
    atomic_write_bytes(path, artifact_to_bytes(rom))


def load_artifact(path, expect: Union[RomKind, str, None] = None) -> RomArtifact:
    """Read an artifact; ``expect`` raises :class:`IngestionError` on a kind mismatch."""
    with open(path, "rb") as fh:
        rom = artifact_from_bytes(fh.read())
    if expect is not None and kind_of(rom) is not RomKind.parse(expect):
        raise IngestionError(f"artifact is {kind_of(rom).label}, expected {RomKind.parse(expect).label}")
    return rom
