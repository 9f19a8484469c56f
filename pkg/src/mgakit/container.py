"""Chunk-level reader and writer for RIFF/WAVE, RF64, and BW64 audio files.

The container is treated as an ordered list of tagged chunks.  Only the
chunks the toolkit cares about (fmt, data, ds64, bext, axml) are
interpreted; everything else is carried through byte-exact so that a
parse/write cycle never destroys foreign metadata.

64-bit layout notes:

* RF64 and BW64 share the same structure: the master size field and the
  data chunk size field hold the sentinel 0xFFFFFFFF and the real sizes
  live in a ds64 chunk that is always the first chunk in the file.
* The ds64 payload is riff_size (u64), data_size (u64), sample_count
  (u64), table_length (u32), then table_length entries of
  (fourcc, u64 size) for any other chunk too large for a 32-bit field.
* Writes never emit RF64; 64-bit output is always BW64.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import BinaryIO

from .errors import MgaError

UINT32_MAX = 0xFFFFFFFF

FMT = "fmt "
DATA = "data"
DS64 = "ds64"
BEXT = "bext"
AXML = "axml"

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
# KSDATAFORMAT_SUBTYPE_PCM, little-endian GUID bytes
PCM_SUBFORMAT_GUID = bytes.fromhex("0100000000001000800000aa00389b71")

SUPPORTED_BIT_DEPTHS = (16, 24, 32)

# Fixed-width region of the bext payload: the fields below plus a 256-byte
# block (version, UMID, loudness values, reserved) that is preserved opaque.
_BEXT_TEXT_WIDTHS = (
    ("description", 256),
    ("originator", 32),
    ("originator_reference", 32),
    ("origination_date", 10),
    ("origination_time", 8),
)
_BEXT_OPAQUE_SIZE = 256
BEXT_FIXED_SIZE = 256 + 32 + 32 + 10 + 8 + 8 + _BEXT_OPAQUE_SIZE  # 602

_DEFAULT_BEXT_OPAQUE = struct.pack("<H", 1) + b"\x00" * (_BEXT_OPAQUE_SIZE - 2)


class ContainerError(MgaError):
    pass


class MalformedContainer(ContainerError):
    pass


class UnsupportedEncoding(ContainerError):
    pass


class MalformedChunk(ContainerError):
    pass


class OversizeForRiff(ContainerError):
    pass


class DescriptionTooLong(ContainerError):
    pass


class FieldTooLong(ContainerError):
    pass


class NonAsciiText(ContainerError):
    pass


class InvalidUtf8(ContainerError):
    pass


class ContainerFormat(Enum):
    RIFF = "RIFF"
    RF64 = "RF64"
    BW64 = "BW64"

    @property
    def fourcc(self) -> bytes:
        return self.value.encode("ascii")


def select_format(total_content_size: int) -> ContainerFormat:
    """Pick the container format that can hold the given file size.

    RIFF is chosen only while the size stays below the 32-bit sentinel,
    so 0xFFFFFFFF never appears as a real size field value.
    """
    if total_content_size < 2**32 - 1:
        return ContainerFormat.RIFF
    return ContainerFormat.BW64


@dataclass
class Chunk:
    """One tagged block: fourcc, payload, and the size it declares.

    declared_size normally equals len(payload); it only differs for the
    data chunk of a header-level parse of a truncated file.
    """

    fourcc: str
    payload: bytes
    declared_size: int | None = None

    @property
    def size(self) -> int:
        return self.declared_size if self.declared_size is not None else len(self.payload)

    def serialized_size(self) -> int:
        # header + declared payload + pad byte for odd payloads
        return 8 + self.size + (self.size & 1)


@dataclass
class AudioInfo:
    sample_rate: int
    channel_count: int
    bits_per_sample: int
    frame_count: int

    @property
    def frame_size(self) -> int:
        return self.channel_count * self.bits_per_sample // 8

    @property
    def duration_ms(self) -> int:
        return (self.frame_count * 1000 + self.sample_rate // 2) // self.sample_rate


@dataclass
class ContainerFile:
    format_tag: ContainerFormat
    chunks: list[Chunk]
    audio_info: AudioInfo

    @property
    def total_content_size(self) -> int:
        """Serialized byte length of the whole file, from declared sizes."""
        body = [c for c in self.chunks if not _is_leading_ds64(self.chunks, c)]
        total = 12 + sum(c.serialized_size() for c in body)
        if self.format_tag is not ContainerFormat.RIFF:
            total += 8 + _ds64_payload_size(body)
        return total

    def chunk(self, fourcc: str) -> Chunk | None:
        for c in self.chunks:
            if c.fourcc == fourcc:
                return c
        return None

    @property
    def data_chunk(self) -> Chunk:
        c = self.chunk(DATA)
        assert c is not None
        return c


def _is_leading_ds64(chunks: list[Chunk], c: Chunk) -> bool:
    return bool(chunks) and c is chunks[0] and c.fourcc == DS64


def _ds64_payload_size(body: list[Chunk]) -> int:
    table = [c for c in body if c.fourcc != DATA and c.size >= UINT32_MAX]
    return 28 + 12 * len(table)


def parse_container(
    source: bytes | BinaryIO, *, allow_truncated_data: bool = False
) -> ContainerFile:
    """Parse a RIFF/RF64/BW64 stream into a ContainerFile.

    All chunks, known or not, are preserved byte-exact and in order.
    For RF64/BW64 the ds64 chunk must come first and its 64-bit sizes
    override the 32-bit sentinel fields.

    allow_truncated_data permits a final data chunk whose payload is
    shorter than declared; the declared size is kept so header-level
    information (sizes, frame count) stays usable.
    """
    stream = io.BytesIO(source) if isinstance(source, (bytes, bytearray)) else source
    head = stream.read(12)
    if len(head) < 12:
        raise MalformedContainer("file too short for a RIFF header")
    magic = head[:4]
    try:
        format_tag = ContainerFormat(magic.decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise MalformedContainer(f"unknown container magic {magic!r}") from None
    if head[8:12] != b"WAVE":
        raise MalformedContainer("missing WAVE form type")

    is_64bit = format_tag is not ContainerFormat.RIFF
    data_size_64: int | None = None
    size_table: dict[str, int] = {}
    chunks: list[Chunk] = []
    truncated = False

    while True:
        header = stream.read(8)
        if not header:
            break
        if len(header) < 8:
            raise MalformedContainer("truncated chunk header")
        fourcc = header[:4].decode("latin-1")
        size32 = struct.unpack("<I", header[4:8])[0]

        if is_64bit and not chunks:
            if fourcc != DS64:
                raise MalformedContainer(
                    f"{format_tag.value} file must start with a ds64 chunk, found {fourcc!r}"
                )
            payload = stream.read(size32)
            if len(payload) < size32:
                raise MalformedContainer("truncated ds64 chunk")
            data_size_64, size_table = _parse_ds64(payload)
            chunks.append(Chunk(DS64, payload))
            if size32 & 1:
                stream.read(1)
            continue

        size = size32
        if is_64bit and size32 == UINT32_MAX:
            if fourcc == DATA:
                size = data_size_64  # type: ignore[assignment]
            elif fourcc in size_table:
                size = size_table[fourcc]
            else:
                raise MalformedContainer(
                    f"chunk {fourcc!r} uses the 64-bit sentinel but has no ds64 entry"
                )
        payload = stream.read(size)
        declared: int | None = None
        if len(payload) < size:
            if allow_truncated_data and fourcc == DATA:
                declared = size
                truncated = True
            else:
                raise MalformedContainer(
                    f"chunk {fourcc!r} declares {size} bytes, only {len(payload)} present"
                )
        chunks.append(Chunk(fourcc, payload, declared))
        if size & 1 and not truncated:
            stream.read(1)  # pad byte; tolerated absent at EOF

    for name in (FMT, DATA, BEXT, AXML):
        count = sum(1 for c in chunks if c.fourcc == name)
        if name in (FMT, DATA) and count == 0:
            raise MalformedContainer(f"missing {name.strip()!r} chunk")
        if count > 1:
            raise MalformedContainer(f"duplicate {name.strip()!r} chunk")
    if is_64bit and data_size_64 is None:
        raise MalformedContainer("ds64 chunk missing")

    fmt = next(c for c in chunks if c.fourcc == FMT)
    data = next(c for c in chunks if c.fourcc == DATA)
    audio_info = _parse_fmt(fmt.payload, data.size)
    return ContainerFile(format_tag=format_tag, chunks=chunks, audio_info=audio_info)


def _parse_ds64(payload: bytes) -> tuple[int, dict[str, int]]:
    if len(payload) < 28:
        raise MalformedContainer("ds64 payload shorter than 28 bytes")
    _riff_size, data_size, _sample_count, table_len = struct.unpack_from("<QQQI", payload)
    table: dict[str, int] = {}
    offset = 28
    for _ in range(table_len):
        if offset + 12 > len(payload):
            raise MalformedContainer("ds64 size table truncated")
        fourcc, size = struct.unpack_from("<4sQ", payload, offset)
        table[fourcc.decode("latin-1")] = size
        offset += 12
    return data_size, table


def _parse_fmt(payload: bytes, data_size: int) -> AudioInfo:
    if len(payload) < 16:
        raise MalformedContainer("fmt chunk shorter than 16 bytes")
    code, channels, rate, _byte_rate, block_align, bits = struct.unpack_from(
        "<HHIIHH", payload
    )
    if code == WAVE_FORMAT_EXTENSIBLE:
        if len(payload) < 40 or payload[24:40] != PCM_SUBFORMAT_GUID:
            raise UnsupportedEncoding("extensible fmt without integer PCM subformat")
    elif code != WAVE_FORMAT_PCM:
        raise UnsupportedEncoding(f"unsupported fmt code 0x{code:04x}, only PCM handled")
    if bits not in SUPPORTED_BIT_DEPTHS:
        raise UnsupportedEncoding(f"unsupported bit depth {bits}")
    if channels < 1 or rate < 1:
        raise MalformedContainer("fmt declares a non-positive channel count or rate")
    frame_size = channels * bits // 8
    if block_align != frame_size:
        raise MalformedContainer(
            f"block align {block_align} inconsistent with {channels}ch/{bits}bit"
        )
    if data_size % frame_size:
        raise MalformedContainer("data size is not a whole number of frames")
    return AudioInfo(rate, channels, bits, data_size // frame_size)


def write_container(file: ContainerFile, *, pin_format: bool = False) -> bytes:
    """Serialize a ContainerFile back to bytes.

    RIFF files whose content outgrows 32-bit sizes are upgraded to BW64
    automatically unless pin_format is set, in which case OversizeForRiff
    is raised.  RF64 input is re-emitted as BW64.
    """
    _validate_for_write(file)
    body = [c for c in file.chunks if not _is_leading_ds64(file.chunks, c)]
    riff_total = 12 + sum(c.serialized_size() for c in body)

    if file.format_tag is ContainerFormat.RIFF:
        target = select_format(riff_total)
        if target is ContainerFormat.BW64 and pin_format:
            raise OversizeForRiff(
                f"content of {riff_total} bytes does not fit a RIFF container"
            )
    else:
        target = ContainerFormat.BW64

    out = io.BytesIO()
    if target is ContainerFormat.RIFF:
        out.write(b"RIFF" + struct.pack("<I", riff_total - 8) + b"WAVE")
        for c in body:
            _write_chunk(out, c, c.size)
    else:
        ds64_size = _ds64_payload_size(body)
        total = 12 + (8 + ds64_size) + sum(c.serialized_size() for c in body)
        table = [c for c in body if c.fourcc != DATA and c.size >= UINT32_MAX]
        ds64 = struct.pack(
            "<QQQI",
            total - 8,
            next(c.size for c in body if c.fourcc == DATA),
            file.audio_info.frame_count,
            len(table),
        )
        for c in table:
            ds64 += struct.pack("<4sQ", c.fourcc.encode("latin-1"), c.size)
        out.write(b"BW64" + struct.pack("<I", UINT32_MAX) + b"WAVE")
        _write_chunk(out, Chunk(DS64, ds64), len(ds64))
        for c in body:
            if c.fourcc == DATA or c.size >= UINT32_MAX:
                _write_chunk(out, c, UINT32_MAX)
            else:
                _write_chunk(out, c, c.size)
    return out.getvalue()


def _write_chunk(out: io.BytesIO, chunk: Chunk, size_field: int) -> None:
    fourcc = chunk.fourcc.encode("latin-1")
    if len(fourcc) != 4:
        raise MalformedChunk(f"fourcc {chunk.fourcc!r} is not 4 bytes")
    out.write(fourcc + struct.pack("<I", size_field))
    out.write(chunk.payload)
    if chunk.size & 1 and len(chunk.payload) == chunk.size:
        out.write(b"\x00")


def _validate_for_write(file: ContainerFile) -> None:
    for name in (FMT, DATA, BEXT, AXML):
        count = sum(1 for c in file.chunks if c.fourcc == name)
        if name in (FMT, DATA) and count != 1:
            raise MalformedContainer(f"file must contain exactly one {name.strip()!r} chunk")
        if count > 1:
            raise MalformedContainer(f"duplicate {name.strip()!r} chunk")
    info = file.audio_info
    if info.frame_count * info.frame_size != file.data_chunk.size:
        raise MalformedContainer("audio info inconsistent with data chunk size")


def build_pcm(
    sample_rate: int,
    channel_count: int,
    bits_per_sample: int,
    frames: bytes,
    *,
    format_tag: ContainerFormat | None = None,
) -> ContainerFile:
    """Assemble a minimal PCM container around raw interleaved frames."""
    if bits_per_sample not in SUPPORTED_BIT_DEPTHS:
        raise UnsupportedEncoding(f"unsupported bit depth {bits_per_sample}")
    frame_size = channel_count * bits_per_sample // 8
    if len(frames) % frame_size:
        raise MalformedContainer("frame data is not a whole number of frames")
    fmt_payload = struct.pack(
        "<HHIIHH",
        WAVE_FORMAT_PCM,
        channel_count,
        sample_rate,
        sample_rate * frame_size,
        frame_size,
        bits_per_sample,
    )
    chunks = [Chunk(FMT, fmt_payload), Chunk(DATA, frames)]
    info = AudioInfo(sample_rate, channel_count, bits_per_sample, len(frames) // frame_size)
    file = ContainerFile(ContainerFormat.RIFF, chunks, info)
    if format_tag is None:
        format_tag = select_format(file.total_content_size)
    file.format_tag = format_tag
    return file


@dataclass
class BextInfo:
    """Broadcast extension chunk fields.

    The 256-byte block between time_reference and the coding history
    (version, UMID, loudness) is kept opaque in `reserved` and written
    back untouched.
    """

    description: str = ""
    originator: str = ""
    originator_reference: str = ""
    origination_date: str = ""
    origination_time: str = ""
    time_reference: int = 0
    coding_history: str = ""
    reserved: bytes = field(default=_DEFAULT_BEXT_OPAQUE, repr=False)


def read_bext(file: ContainerFile) -> BextInfo | None:
    chunk = file.chunk(BEXT)
    if chunk is None:
        return None
    payload = chunk.payload
    if len(payload) < BEXT_FIXED_SIZE:
        raise MalformedChunk(
            f"bext payload of {len(payload)} bytes is shorter than the "
            f"{BEXT_FIXED_SIZE}-byte fixed region"
        )
    texts = {}
    offset = 0
    for name, width in _BEXT_TEXT_WIDTHS:
        texts[name] = payload[offset : offset + width].rstrip(b"\x00").decode(
            "ascii", errors="replace"
        )
        offset += width
    time_reference = struct.unpack_from("<Q", payload, offset)[0]
    offset += 8
    reserved = payload[offset : offset + _BEXT_OPAQUE_SIZE]
    offset += _BEXT_OPAQUE_SIZE
    history = payload[offset:].rstrip(b"\x00").decode("ascii", errors="replace")
    return BextInfo(
        description=texts["description"],
        originator=texts["originator"],
        originator_reference=texts["originator_reference"],
        origination_date=texts["origination_date"],
        origination_time=texts["origination_time"],
        time_reference=time_reference,
        coding_history=history,
        reserved=reserved,
    )


def write_bext(file: ContainerFile, info: BextInfo) -> ContainerFile:
    payload = bytearray()
    for name, width in _BEXT_TEXT_WIDTHS:
        text = getattr(info, name)
        try:
            raw = text.encode("ascii")
        except UnicodeEncodeError:
            raise NonAsciiText(f"bext {name} must be ASCII") from None
        if len(raw) > width:
            if name == "description":
                raise DescriptionTooLong(
                    f"description is {len(raw)} bytes, the chunk allows 256"
                )
            raise FieldTooLong(f"bext {name} is {len(raw)} bytes, limit {width}")
        payload += raw.ljust(width, b"\x00")
    payload += struct.pack("<Q", info.time_reference)
    if len(info.reserved) > _BEXT_OPAQUE_SIZE:
        raise MalformedChunk("bext reserved block larger than 256 bytes")
    payload += info.reserved.ljust(_BEXT_OPAQUE_SIZE, b"\x00")
    try:
        payload += info.coding_history.encode("ascii")
    except UnicodeEncodeError:
        raise NonAsciiText("bext coding_history must be ASCII") from None
    return _with_chunk(file, Chunk(BEXT, bytes(payload)))


def read_axml(file: ContainerFile) -> str | None:
    chunk = file.chunk(AXML)
    if chunk is None:
        return None
    try:
        return chunk.payload.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8(f"axml payload is not valid UTF-8: {exc}") from None


def write_axml(file: ContainerFile, xml: str) -> ContainerFile:
    return _with_chunk(file, Chunk(AXML, xml.encode("utf-8")))


def _with_chunk(file: ContainerFile, new: Chunk) -> ContainerFile:
    """Return a copy of the file with `new` replacing its namesake chunk,
    or inserted just before the data chunk."""
    chunks = list(file.chunks)
    for i, c in enumerate(chunks):
        if c.fourcc == new.fourcc:
            chunks[i] = new
            break
    else:
        data_at = next(i for i, c in enumerate(chunks) if c.fourcc == DATA)
        chunks.insert(data_at, new)
    return replace(file, chunks=chunks)
