"""AES-128 built from its round primitives, plus the telemetry formats.

The block cipher is implemented from first principles: byte substitution,
row rotation, column mixing over GF(2^8) and round-key addition, with a ten
round schedule expanded from the 16-byte key. The final encryption round
skips column mixing; decryption applies the inverse primitives in reverse.
This is an educational cipher for a simulated network. Production systems
should use a vetted cryptography provider instead.

State layout is column-major over a flat 16-byte block: state[r + 4*c] is
row r, column c, matching the usual presentation of the transforms.

On top of the block cipher sit two wire formats:

* telemetry frames: fixed 26-byte vitals records, CBC-encrypted with a
  prepended IV and PKCS#7 padding;
* sealed envelopes: encrypt-then-MAC bundles whose encryption key comes
  from a passphrase and whose tag key comes from a separate signing key,
  mirroring a two-channel handoff where the envelope and the passphrase
  travel to the recipient by different routes.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

SBOX = bytes((
    0x63, 0x7C, 0x77, 0x7B, 0xF2, 0x6B, 0x6F, 0xC5, 0x30, 0x01, 0x67, 0x2B, 0xFE, 0xD7, 0xAB, 0x76,
    0xCA, 0x82, 0xC9, 0x7D, 0xFA, 0x59, 0x47, 0xF0, 0xAD, 0xD4, 0xA2, 0xAF, 0x9C, 0xA4, 0x72, 0xC0,
    0xB7, 0xFD, 0x93, 0x26, 0x36, 0x3F, 0xF7, 0xCC, 0x34, 0xA5, 0xE5, 0xF1, 0x71, 0xD8, 0x31, 0x15,
    0x04, 0xC7, 0x23, 0xC3, 0x18, 0x96, 0x05, 0x9A, 0x07, 0x12, 0x80, 0xE2, 0xEB, 0x27, 0xB2, 0x75,
    0x09, 0x83, 0x2C, 0x1A, 0x1B, 0x6E, 0x5A, 0xA0, 0x52, 0x3B, 0xD6, 0xB3, 0x29, 0xE3, 0x2F, 0x84,
    0x53, 0xD1, 0x00, 0xED, 0x20, 0xFC, 0xB1, 0x5B, 0x6A, 0xCB, 0xBE, 0x39, 0x4A, 0x4C, 0x58, 0xCF,
    0xD0, 0xEF, 0xAA, 0xFB, 0x43, 0x4D, 0x33, 0x85, 0x45, 0xF9, 0x02, 0x7F, 0x50, 0x3C, 0x9F, 0xA8,
    0x51, 0xA3, 0x40, 0x8F, 0x92, 0x9D, 0x38, 0xF5, 0xBC, 0xB6, 0xDA, 0x21, 0x10, 0xFF, 0xF3, 0xD2,
    0xCD, 0x0C, 0x13, 0xEC, 0x5F, 0x97, 0x44, 0x17, 0xC4, 0xA7, 0x7E, 0x3D, 0x64, 0x5D, 0x19, 0x73,
    0x60, 0x81, 0x4F, 0xDC, 0x22, 0x2A, 0x90, 0x88, 0x46, 0xEE, 0xB8, 0x14, 0xDE, 0x5E, 0x0B, 0xDB,
    0xE0, 0x32, 0x3A, 0x0A, 0x49, 0x06, 0x24, 0x5C, 0xC2, 0xD3, 0xAC, 0x62, 0x91, 0x95, 0xE4, 0x79,
    0xE7, 0xC8, 0x37, 0x6D, 0x8D, 0xD5, 0x4E, 0xA9, 0x6C, 0x56, 0xF4, 0xEA, 0x65, 0x7A, 0xAE, 0x08,
    0xBA, 0x78, 0x25, 0x2E, 0x1C, 0xA6, 0xB4, 0xC6, 0xE8, 0xDD, 0x74, 0x1F, 0x4B, 0xBD, 0x8B, 0x8A,
    0x70, 0x3E, 0xB5, 0x66, 0x48, 0x03, 0xF6, 0x0E, 0x61, 0x35, 0x57, 0xB9, 0x86, 0xC1, 0x1D, 0x9E,
    0xE1, 0xF8, 0x98, 0x11, 0x69, 0xD9, 0x8E, 0x94, 0x9B, 0x1E, 0x87, 0xE9, 0xCE, 0x55, 0x28, 0xDF,
    0x8C, 0xA1, 0x89, 0x0D, 0xBF, 0xE6, 0x42, 0x68, 0x41, 0x99, 0x2D, 0x0F, 0xB0, 0x54, 0xBB, 0x16,
))

INV_SBOX = bytes(SBOX.index(i) for i in range(256))

_RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)

BLOCK_SIZE = 16
KEY_SIZE = 16
ROUNDS = 10


class BlockSizeError(ValueError):
    """A block or key has the wrong length."""


class PaddingError(ValueError):
    """PKCS#7 padding failed to verify."""


class FrameError(ValueError):
    """Encrypted frame bytes are structurally wrong or fail to decode."""


class EnvelopeError(ValueError):
    """Base class for sealed-envelope failures."""


class EnvelopeTagError(EnvelopeError):
    """Integrity tag or signing-key fingerprint did not verify."""


class EnvelopeDecryptError(EnvelopeError):
    """Tag verified but the passphrase-derived decryption failed."""


class EnvelopeFormatError(EnvelopeError):
    """Envelope bytes do not parse (bad magic or truncated)."""


def _check_block(block: bytes) -> None:
    if len(block) != BLOCK_SIZE:
        raise BlockSizeError(f"need {BLOCK_SIZE} bytes, got {len(block)}")


def gmul(a: int, b: int) -> int:
    """Multiply in GF(2^8) modulo x^8 + x^4 + x^3 + x + 1."""
    result = 0
    for _ in range(8):
        if b & 1:
            result ^= a
        high = a & 0x80
        a = (a << 1) & 0xFF
        if high:
            a ^= 0x1B
        b >>= 1
    return result


def sub_bytes(block: bytes) -> bytes:
    _check_block(block)
    return bytes(SBOX[b] for b in block)


def inv_sub_bytes(block: bytes) -> bytes:
    _check_block(block)
    return bytes(INV_SBOX[b] for b in block)


def shift_rows(block: bytes) -> bytes:
    """Rotate row r left by r positions."""
    _check_block(block)
    return bytes(block[(i % 4) + 4 * ((i // 4 + i % 4) % 4)] for i in range(16))


def inv_shift_rows(block: bytes) -> bytes:
    _check_block(block)
    return bytes(block[(i % 4) + 4 * ((i // 4 - i % 4) % 4)] for i in range(16))


def mix_columns(block: bytes) -> bytes:
    _check_block(block)
    out = bytearray(16)
    for c in range(4):
        s0, s1, s2, s3 = block[4 * c : 4 * c + 4]
        out[4 * c + 0] = gmul(s0, 2) ^ gmul(s1, 3) ^ s2 ^ s3
        out[4 * c + 1] = s0 ^ gmul(s1, 2) ^ gmul(s2, 3) ^ s3
        out[4 * c + 2] = s0 ^ s1 ^ gmul(s2, 2) ^ gmul(s3, 3)
        out[4 * c + 3] = gmul(s0, 3) ^ s1 ^ s2 ^ gmul(s3, 2)
    return bytes(out)


def inv_mix_columns(block: bytes) -> bytes:
    _check_block(block)
    out = bytearray(16)
    for c in range(4):
        s0, s1, s2, s3 = block[4 * c : 4 * c + 4]
        out[4 * c + 0] = gmul(s0, 14) ^ gmul(s1, 11) ^ gmul(s2, 13) ^ gmul(s3, 9)
        out[4 * c + 1] = gmul(s0, 9) ^ gmul(s1, 14) ^ gmul(s2, 11) ^ gmul(s3, 13)
        out[4 * c + 2] = gmul(s0, 13) ^ gmul(s1, 9) ^ gmul(s2, 14) ^ gmul(s3, 11)
        out[4 * c + 3] = gmul(s0, 11) ^ gmul(s1, 13) ^ gmul(s2, 9) ^ gmul(s3, 14)
    return bytes(out)


def add_round_key(block: bytes, round_key: bytes) -> bytes:
    _check_block(block)
    _check_block(round_key)
    return bytes(a ^ b for a, b in zip(block, round_key))


def key_expand(key: bytes) -> tuple[bytes, ...]:
    """Expand a 16-byte key into 11 round keys; round key 0 is the key."""
    if len(key) != KEY_SIZE:
        raise BlockSizeError(f"need a {KEY_SIZE}-byte key, got {len(key)}")
    words = [key[4 * i : 4 * i + 4] for i in range(4)]
    for i in range(4, 4 * (ROUNDS + 1)):
        temp = words[i - 1]
        if i % 4 == 0:
            rotated = temp[1:] + temp[:1]
            temp = bytes(SBOX[b] for b in rotated)
            temp = bytes((temp[0] ^ _RCON[i // 4 - 1],)) + temp[1:]
        words.append(bytes(a ^ b for a, b in zip(words[i - 4], temp)))
    return tuple(b"".join(words[4 * r : 4 * r + 4]) for r in range(ROUNDS + 1))


def encrypt_block(block: bytes, round_keys: tuple[bytes, ...]) -> bytes:
    """One AES-128 block: 9 full rounds, final round without column mixing."""
    _check_block(block)
    state = add_round_key(block, round_keys[0])
    for r in range(1, ROUNDS):
        state = sub_bytes(state)
        state = shift_rows(state)
        state = mix_columns(state)
        state = add_round_key(state, round_keys[r])
    state = sub_bytes(state)
    state = shift_rows(state)
    return add_round_key(state, round_keys[ROUNDS])


def decrypt_block(block: bytes, round_keys: tuple[bytes, ...]) -> bytes:
    """Inverse walk: round-key addition, then per round the inverse mixes,
    shifts and substitutions in the order that undoes encrypt_block."""
    _check_block(block)
    state = add_round_key(block, round_keys[ROUNDS])
    state = inv_shift_rows(state)
    state = inv_sub_bytes(state)
    for r in range(ROUNDS - 1, 0, -1):
        state = add_round_key(state, round_keys[r])
        state = inv_mix_columns(state)
        state = inv_shift_rows(state)
        state = inv_sub_bytes(state)
    return add_round_key(state, round_keys[0])


def pkcs7_pad(data: bytes) -> bytes:
    pad_len = BLOCK_SIZE - (len(data) % BLOCK_SIZE)
    return data + bytes((pad_len,)) * pad_len


def pkcs7_unpad(data: bytes) -> bytes:
    if not data or len(data) % BLOCK_SIZE:
        raise PaddingError("data length is not a positive multiple of the block size")
    pad_len = data[-1]
    if not 1 <= pad_len <= BLOCK_SIZE or data[-pad_len:] != bytes((pad_len,)) * pad_len:
        raise PaddingError("bad padding bytes")
    return data[:-pad_len]


def cbc_encrypt(data: bytes, round_keys: tuple[bytes, ...], iv: bytes) -> bytes:
    _check_block(iv)
    if len(data) % BLOCK_SIZE:
        raise BlockSizeError("CBC input must be block-aligned")
    out = bytearray()
    prev = iv
    for i in range(0, len(data), BLOCK_SIZE):
        block = bytes(a ^ b for a, b in zip(data[i : i + BLOCK_SIZE], prev))
        prev = encrypt_block(block, round_keys)
        out += prev
    return bytes(out)


def cbc_decrypt(data: bytes, round_keys: tuple[bytes, ...], iv: bytes) -> bytes:
    _check_block(iv)
    if len(data) % BLOCK_SIZE:
        raise BlockSizeError("CBC input must be block-aligned")
    out = bytearray()
    prev = iv
    for i in range(0, len(data), BLOCK_SIZE):
        chunk = data[i : i + BLOCK_SIZE]
        plain = decrypt_block(chunk, round_keys)
        out += bytes(a ^ b for a, b in zip(plain, prev))
        prev = chunk
    return bytes(out)


# --- telemetry frames -------------------------------------------------------

_FRAME_STRUCT = struct.Struct(">8sIQHHH")
FRAME_SIZE = _FRAME_STRUCT.size  # 26 bytes


@dataclass(frozen=True)
class TelemetryFrame:
    """One vitals sample from a bracelet.

    device_id is exactly 8 bytes; seq is a 32-bit counter; timestamp is a
    64-bit logical millisecond value. Pressure ordering (systolic above
    diastolic) is a medical-layer concern checked downstream, not here.
    """

    device_id: bytes
    seq: int
    timestamp: int
    systolic: int
    diastolic: int
    pulse: int

    def __post_init__(self) -> None:
        if len(self.device_id) != 8:
            raise ValueError("device_id must be exactly 8 bytes")
        if not 0 <= self.seq <= 0xFFFFFFFF:
            raise ValueError("seq out of u32 range")
        if not 0 <= self.timestamp <= 0xFFFFFFFFFFFFFFFF:
            raise ValueError("timestamp out of u64 range")
        for name in ("systolic", "diastolic", "pulse"):
            v = getattr(self, name)
            if not 0 <= v <= 0xFFFF:
                raise ValueError(f"{name} out of u16 range")


def serialize_frame(frame: TelemetryFrame) -> bytes:
    return _FRAME_STRUCT.pack(
        frame.device_id, frame.seq, frame.timestamp,
        frame.systolic, frame.diastolic, frame.pulse,
    )


def deserialize_frame(data: bytes) -> TelemetryFrame:
    if len(data) != FRAME_SIZE:
        raise FrameError(f"frame must be {FRAME_SIZE} bytes, got {len(data)}")
    device_id, seq, timestamp, systolic, diastolic, pulse = _FRAME_STRUCT.unpack(data)
    return TelemetryFrame(device_id, seq, timestamp, systolic, diastolic, pulse)


def encrypt_frame(frame: TelemetryFrame, key: bytes, iv: bytes) -> bytes:
    """Return iv followed by the CBC ciphertext of the padded frame."""
    round_keys = key_expand(key)
    return iv + cbc_encrypt(pkcs7_pad(serialize_frame(frame)), round_keys, iv)


def decrypt_frame(data: bytes, key: bytes) -> TelemetryFrame:
    """Undo encrypt_frame; wrong keys or tampering surface as FrameError."""
    if len(data) < 2 * BLOCK_SIZE or (len(data) - BLOCK_SIZE) % BLOCK_SIZE:
        raise FrameError(f"ciphertext length {len(data)} is not iv + blocks")
    round_keys = key_expand(key)
    iv, body = data[:BLOCK_SIZE], data[BLOCK_SIZE:]
    try:
        padded = pkcs7_unpad(cbc_decrypt(body, round_keys, iv))
    except PaddingError as exc:
        raise FrameError(f"frame decryption failed: {exc}") from None
    return deserialize_frame(padded)


# --- sealed envelopes --------------------------------------------------------
#
# File layout: b"env1" | key_hint[4] | tag[16] | ciphertext, where the
# ciphertext field is iv[16] | CBC blocks. The encrypted payload itself is a
# 4-byte big-endian length followed by the data, so a wrong passphrase fails
# structurally instead of slipping through on lucky padding.

ENVELOPE_MAGIC = b"env1"
_KDF_ITERATIONS = 10_000
TAG_SIZE = 16
HINT_SIZE = 4


@dataclass(frozen=True)
class SealedEnvelope:
    ciphertext: bytes  # iv | CBC blocks
    tag: bytes
    key_hint: bytes

    def __post_init__(self) -> None:
        if len(self.tag) != TAG_SIZE:
            raise ValueError(f"tag must be {TAG_SIZE} bytes")
        if len(self.key_hint) != HINT_SIZE:
            raise ValueError(f"key_hint must be {HINT_SIZE} bytes")


def derive_envelope_key(passphrase: str) -> bytes:
    """Stretch a passphrase into a 16-byte AES key by iterated hashing."""
    if not passphrase:
        raise ValueError("passphrase must be non-empty")
    digest = hashlib.sha256(b"env-enc:" + passphrase.encode("utf-8")).digest()
    for _ in range(_KDF_ITERATIONS):
        digest = hashlib.sha256(digest).digest()
    return digest[:KEY_SIZE]


def _mac_key(sign_key: bytes) -> bytes:
    return hashlib.sha256(b"env-mac:" + sign_key).digest()


def sign_key_hint(sign_key: bytes) -> bytes:
    return hashlib.sha256(b"env-hint:" + sign_key).digest()[:HINT_SIZE]


def _derive_iv(enc_key: bytes, payload: bytes) -> bytes:
    # Deterministic so sealed fixtures replay byte-identically; a production
    # system would draw a fresh random iv instead.
    return hashlib.sha256(b"env-iv:" + enc_key + payload).digest()[:BLOCK_SIZE]


def envelope_seal(data: bytes, passphrase: str, sign_key: bytes, iv: bytes | None = None) -> SealedEnvelope:
    """Encrypt data under the passphrase and tag it under the signing key.

    The two secrets are deliberately independent: whoever holds only the
    envelope (and even the signing key) cannot read the payload without the
    passphrase, which is expected to travel by a separate channel.
    """
    enc_key = derive_envelope_key(passphrase)
    payload = len(data).to_bytes(4, "big") + data
    if iv is None:
        iv = _derive_iv(enc_key, payload)
    elif len(iv) != BLOCK_SIZE:
        raise BlockSizeError(f"iv must be {BLOCK_SIZE} bytes")
    ciphertext = iv + cbc_encrypt(pkcs7_pad(payload), key_expand(enc_key), iv)
    tag = hmac.new(_mac_key(sign_key), ciphertext, hashlib.sha256).digest()[:TAG_SIZE]
    return SealedEnvelope(ciphertext=ciphertext, tag=tag, key_hint=sign_key_hint(sign_key))


def envelope_open(envelope: SealedEnvelope, passphrase: str, sign_key: bytes) -> bytes:
    """Verify the tag, then decrypt. Tag and decryption failures differ."""
    if envelope.key_hint != sign_key_hint(sign_key):
        raise EnvelopeTagError("signing key fingerprint mismatch")
    expected = hmac.new(_mac_key(sign_key), envelope.ciphertext, hashlib.sha256).digest()[:TAG_SIZE]
    if not hmac.compare_digest(expected, envelope.tag):
        raise EnvelopeTagError("integrity tag mismatch")
    enc_key = derive_envelope_key(passphrase)
    body = envelope.ciphertext
    if len(body) < 2 * BLOCK_SIZE or len(body) % BLOCK_SIZE:
        raise EnvelopeDecryptError("ciphertext length is not iv + blocks")
    iv, blocks = body[:BLOCK_SIZE], body[BLOCK_SIZE:]
    try:
        payload = pkcs7_unpad(cbc_decrypt(blocks, key_expand(enc_key), iv))
    except PaddingError:
        raise EnvelopeDecryptError("decryption failed (wrong passphrase?)") from None
    if len(payload) < 4:
        raise EnvelopeDecryptError("decrypted payload too short")
    length = int.from_bytes(payload[:4], "big")
    if length != len(payload) - 4:
        raise EnvelopeDecryptError("decrypted payload fails the structure check")
    return payload[4:]


def write_envelope(envelope: SealedEnvelope) -> bytes:
    return ENVELOPE_MAGIC + envelope.key_hint + envelope.tag + envelope.ciphertext


def read_envelope(data: bytes) -> SealedEnvelope:
    if len(data) < len(ENVELOPE_MAGIC) + HINT_SIZE + TAG_SIZE:
        raise EnvelopeFormatError("envelope bytes truncated")
    if data[: len(ENVELOPE_MAGIC)] != ENVELOPE_MAGIC:
        raise EnvelopeFormatError("bad envelope magic")
    offset = len(ENVELOPE_MAGIC)
    key_hint = data[offset : offset + HINT_SIZE]
    offset += HINT_SIZE
    tag = data[offset : offset + TAG_SIZE]
    offset += TAG_SIZE
    return SealedEnvelope(ciphertext=data[offset:], tag=tag, key_hint=key_hint)
