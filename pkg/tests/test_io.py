import numpy as np
import pytest

from sdal import rom_ksnn, rom_nn
from sdal.artifact import (
    RomKind,
    artifact_from_bytes,
    artifact_to_bytes,
    kind_of,
    load_artifact,
    network_from_bytes,
    network_to_bytes,
    save_artifact,
)
from sdal.errors import IngestionError
from sdal.io import (
    read_points_csv,
    read_snapshots,
    read_snapshots_bin,
    read_snapshots_csv,
    snapshots_from_bytes,
    snapshots_to_bytes,
    write_points_csv,
    write_snapshots_bin,
    write_snapshots_csv,
)
from sdal.pod import SnapshotMatrix
from sdal.rbf import RbfKernelSpec, fit_interpolation

T = np.linspace(0.0, 1.0, 4)


def snap(mu=0.3, seed=0):
    return SnapshotMatrix(np.random.default_rng(seed).standard_normal((6, 4)), [mu], T)


def small_training():
    mus = np.linspace(0.0, 1.0, 4)
    return mus, [snap(m, k) for k, m in enumerate(mus)]


def assert_same_snap(a, b):
    assert a.values.tobytes() == b.values.tobytes()
    assert a.time_grid.tobytes() == b.time_grid.tobytes()
    assert a.parameter.tobytes() == b.parameter.tobytes()


class TestSnapshots:
    def test_binary_round_trip(self, tmp_path):
        s = snap()
        write_snapshots_bin(tmp_path / "a.sdal", s)
        assert_same_snap(read_snapshots_bin(tmp_path / "a.sdal"), s)
        assert_same_snap(snapshots_from_bytes(snapshots_to_bytes(s)), s)

    def test_csv_round_trip_exact(self, tmp_path):
        s = snap()
        write_snapshots_csv(tmp_path / "a.csv", s)
        assert_same_snap(read_snapshots_csv(tmp_path / "a.csv", [0.3]), s)

    def test_dispatch(self, tmp_path):
        s = snap()
        write_snapshots_bin(tmp_path / "a.sdal", s)
        write_snapshots_csv(tmp_path / "a.csv", s)
        assert_same_snap(read_snapshots(tmp_path / "a.sdal"), s)
        assert_same_snap(read_snapshots(tmp_path / "a.csv", 0.3), s)
        with pytest.raises(IngestionError):
            read_snapshots(tmp_path / "a.csv")

    def test_truncated_binary(self):
        data = snapshots_to_bytes(snap())
        with pytest.raises(IngestionError):
            snapshots_from_bytes(data[:-8])
        with pytest.raises(IngestionError):
            snapshots_from_bytes(b"XXXX" + data[4:])

    def test_bad_csv(self, tmp_path):
        (tmp_path / "b.csv").write_text("0,1\n1,x\n")
        with pytest.raises(IngestionError):
            read_snapshots_csv(tmp_path / "b.csv", [0.0])


class TestPoints:
    def test_round_trip(self, tmp_path):
        pts = np.array([[0.1, 2.0], [1.0 / 3.0, -4.5]])
        write_points_csv(tmp_path / "p.csv", pts)
        assert read_points_csv(tmp_path / "p.csv").tobytes() == pts.tobytes()

    def test_headerless_and_empty(self, tmp_path):
        (tmp_path / "p.csv").write_text("# comment\n0.5\n0.25\n")
        assert read_points_csv(tmp_path / "p.csv")[:, 0].tolist() == [0.5, 0.25]
        write_points_csv(tmp_path / "e.csv", np.empty((0, 1)))
        assert read_points_csv(tmp_path / "e.csv").shape == (0, 1)


class TestArtifacts:
    def test_network_round_trip(self):
        net = fit_interpolation(np.linspace(0, 1, 5), np.arange(10.0).reshape(5, 2), RbfKernelSpec("gaussian", 0.3))
        back = network_from_bytes(network_to_bytes(net))
        assert back.weights.tobytes() == net.weights.tobytes()
        assert (back.kind, back.status, back.ridge) == (net.kind, net.status, net.ridge)

    def test_ksnn_round_trip(self, tmp_path):
        mus, snaps = small_training()
        rom = rom_ksnn.offline_build(mus, snaps, RbfKernelSpec("cubic", 1.0), 1e-8, RbfKernelSpec("gaussian", 0.5))
        save_artifact(tmp_path / "k.sdalrom", rom)
        back = load_artifact(tmp_path / "k.sdalrom", "pod-ksnn")
        assert kind_of(back) is RomKind.POD_KSNN
        assert back.time_kernel == rom.time_kernel and back.energy_criterion == rom.energy_criterion
        a, _ = rom_ksnn.online_query(rom, 0.45, T)
        b, _ = rom_ksnn.online_query(back, 0.45, T)
        assert a.tobytes() == b.tobytes()

    def test_nn_round_trip(self):
        mus, snaps = small_training()
        rom = rom_nn.offline_build(mus, snaps, 1e-8, 1e-8)
        back = artifact_from_bytes(artifact_to_bytes(rom))
        assert kind_of(back) is RomKind.POD_NN
        assert rom_nn.online_query(rom, 0.45, T).tobytes() == rom_nn.online_query(back, 0.45, T).tobytes()

    def test_mlp_round_trip(self):
        pytest.importorskip("torch")
        mus, snaps = small_training()
        settings = rom_nn.RegressorSettings(kind=rom_nn.RegressorKind.MLP, mlp_hidden=(8,), mlp_epochs=20)
        rom = rom_nn.offline_build(mus, snaps, 1e-8, 1e-8, settings)
        back = artifact_from_bytes(artifact_to_bytes(rom))
        assert rom_nn.online_query(rom, 0.45, T).tobytes() == rom_nn.online_query(back, 0.45, T).tobytes()

    def test_deterministic_bytes(self):
        mus, snaps = small_training()
        a = artifact_to_bytes(rom_ksnn.offline_build(mus, snaps))
        b = artifact_to_bytes(rom_ksnn.offline_build(mus, snaps))
        assert a == b

    def test_kind_mismatch(self, tmp_path):
        mus, snaps = small_training()
        save_artifact(tmp_path / "n.sdalrom", rom_nn.offline_build(mus, snaps, 1e-8, 1e-8))
        with pytest.raises(IngestionError):
            load_artifact(tmp_path / "n.sdalrom", "pod-ksnn")

    def test_corrupt(self):
        mus, snaps = small_training()
        data = artifact_to_bytes(rom_ksnn.offline_build(mus, snaps))
        for bad in (b"NOTAROM\x00" + data[8:], data[:-3], data + b"\x00"):
            with pytest.raises(IngestionError):
                artifact_from_bytes(bad)

    def test_kind_parse(self):
        assert RomKind.parse("POD_NN") is RomKind.POD_NN
        with pytest.raises(ValueError):
            RomKind.parse("pod-x")
