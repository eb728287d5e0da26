import struct
import tempfile
import unittest
from pathlib import Path

from hypothesis import given, settings, strategies as st

from qpochmax.common import (
    BadMagicError,
    CheckpointError,
    ChecksumMismatchError,
    HalfPoly,
    PrefixViolationError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from qpochmax.engine.expansion import expand_to, iterate
from qpochmax.store.checkpoint import (
    MAGIC,
    checkpoint_path,
    crc64,
    decode_checkpoint,
    describe_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)


def _with_crc(body: bytes) -> bytes:
    return body + struct.pack("<Q", crc64(body))


class TestCheckpoint(unittest.TestCase):
    """Binary checkpoint encoding and validation."""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.tmp_path = Path(self.tmpdir.name)
        self.poly = expand_to(40)
        self.data = encode_checkpoint(self.poly)

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_header_layout(self):
        magic, version, n, count = struct.unpack_from("<4sIQQ", self.data, 0)
        self.assertEqual((magic, version, n, count), (MAGIC, 1, 40, 411))

    def test_zero_coefficients_take_five_bytes(self):
        data = encode_checkpoint(expand_to(3))
        # Four entries 1, -1, -1, 0: three with one magnitude byte, one empty.
        self.assertEqual(len(data), 24 + 3 * 6 + 5 + 8)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(min_value=0, max_value=90))
    def test_decode_restores_poly(self, n):
        p = expand_to(n)
        self.assertEqual(decode_checkpoint(encode_checkpoint(p)), p)

    def test_big_coefficients_survive(self):
        p = HalfPoly(3, [1, -1, -1, -(2**300 + 7)])
        self.assertEqual(decode_checkpoint(encode_checkpoint(p), prefix_check=3).to_list(), p.to_list())

    def test_save_and_load(self):
        path = save_checkpoint(self.poly, checkpoint_path(self.tmp_path / "ckpt", 40))
        self.assertEqual(path.name, "qpoch_0000040.qpnb")
        self.assertFalse(path.with_suffix(".qpnb.tmp").exists())
        self.assertEqual(load_checkpoint(path), self.poly)

    def test_describe(self):
        path = save_checkpoint(self.poly, self.tmp_path / "c.qpnb")
        info = describe_checkpoint(path)
        self.assertEqual((info.n, info.count, info.size), (40, 411, len(self.data)))
        self.assertEqual(info.crc, struct.unpack("<Q", self.data[-8:])[0])

    def test_flipped_byte_fails_checksum(self):
        corrupted = bytearray(self.data)
        corrupted[40] ^= 0x01
        with self.assertRaises(ChecksumMismatchError):
            decode_checkpoint(bytes(corrupted))

    def test_bad_magic(self):
        with self.assertRaises(BadMagicError):
            decode_checkpoint(b"XXXX" + self.data[4:])

    def test_version_mismatch(self):
        header = struct.pack("<4sIQQ", MAGIC, 2, 40, 411)
        with self.assertRaises(VersionMismatchError):
            decode_checkpoint(_with_crc(header + self.data[24:-8]))

    def test_too_short(self):
        with self.assertRaises(TruncatedCheckpointError):
            decode_checkpoint(self.data[:20])

    def test_truncated_payload(self):
        with self.assertRaises(TruncatedCheckpointError):
            decode_checkpoint(_with_crc(self.data[:-11]))

    def test_trailing_bytes(self):
        with self.assertRaises(CheckpointError):
            decode_checkpoint(_with_crc(self.data[:-8] + b"\x00"))

    def test_wrong_count(self):
        header = struct.pack("<4sIQQ", MAGIC, 1, 41, 411)
        with self.assertRaises(CheckpointError):
            decode_checkpoint(_with_crc(header + self.data[24:-8]))

    def test_tampered_prefix(self):
        bad = self.poly.copy()
        bad.coeffs[3] = 7
        with self.assertRaises(PrefixViolationError) as cm:
            decode_checkpoint(encode_checkpoint(bad))
        self.assertEqual((cm.exception.index, cm.exception.found, cm.exception.expected), (3, 7, 0))

    def test_prefix_limit(self):
        bad = self.poly.copy()
        bad.coeffs[30] += 1
        self.assertEqual(decode_checkpoint(encode_checkpoint(bad), prefix_check=30).coeffs[30], bad.coeffs[30])
        with self.assertRaises(PrefixViolationError):
            decode_checkpoint(encode_checkpoint(bad), prefix_check=31)

    def test_resume_matches_uninterrupted_run(self):
        path = save_checkpoint(expand_to(25), self.tmp_path / "c.qpnb")
        resumed = [r for _, r in iterate(load_checkpoint(path), 70)]
        straight = [r for _, r in iterate(expand_to(0), 70)][25:]
        self.assertEqual(resumed, straight)


if __name__ == "__main__":
    unittest.main()
