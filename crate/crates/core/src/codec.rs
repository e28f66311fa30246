//! Binary process-accounting records and the `comp_t` number format.
//!
//! A record is 60 bytes, packed, little-endian:
//!
//! | offset | width | field        |
//! |-------:|------:|--------------|
//! |      0 |     1 | `ac_flag`    |
//! |      1 |     2 | `ac_uid`     |
//! |      3 |     2 | `ac_gid`     |
//! |      5 |     2 | `ac_tty`     |
//! |      7 |     4 | `ac_btime`   |
//! |     11 |     2 | `ac_utime`   |
//! |     13 |     2 | `ac_stime`   |
//! |     15 |     2 | `ac_etime`   |
//! |     17 |     2 | `ac_mem`     |
//! |     19 |     2 | `ac_io`      |
//! |     21 |     2 | `ac_rw`      |
//! |     23 |     2 | `ac_minflt`  |
//! |     25 |     2 | `ac_majflt`  |
//! |     27 |     2 | `ac_swaps`   |
//! |     29 |     4 | `ac_exitcode`|
//! |     33 |    17 | `ac_comm`    |
//! |     50 |    10 | `ac_pad`     |

use std::fmt;
use std::io::{self, Read, Write};

use bitflags::bitflags;
use thiserror::Error;

/// Serialized size of one record.
pub const RECORD_LEN: usize = 60;
/// Maximum number of command-name characters.
pub const ACCT_COMM: usize = 16;
/// Width of the command-name field on the wire (name plus terminating NUL).
pub const COMM_WIRE_LEN: usize = ACCT_COMM + 1;
/// Width of the trailing padding.
pub const PAD_LEN: usize = 10;

/// Byte offset of `ac_comm`.
pub const OFF_COMM: usize = 33;
/// Byte offset of `ac_pad`.
pub const OFF_PAD: usize = OFF_COMM + COMM_WIRE_LEN;

const MANTISSA_BITS: u32 = 13;
const MANTISSA_MASK: u16 = (1 << MANTISSA_BITS) - 1;
const MAX_EXPONENT: u32 = 7;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(
        "value {value} for {field} exceeds the comp_t maximum {}",
        CompT::MAX_VALUE
    )]
    Range { field: &'static str, value: u64 },
    #[error("truncated record at byte offset {offset}: {available} of {RECORD_LEN} bytes present")]
    TruncatedRecord { offset: u64, available: usize },
    #[error("{field} is {len} bytes, limit is {limit}")]
    FieldOverflow {
        field: &'static str,
        len: usize,
        limit: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// 16-bit accounting number: 3-bit base-8 exponent over a 13-bit mantissa.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompT(pub u16);

impl CompT {
    pub const ZERO: CompT = CompT(0);
    /// Largest representable value, `8191 * 8^7`.
    pub const MAX_VALUE: u64 = (MANTISSA_MASK as u64) << (3 * MAX_EXPONENT);

    pub fn value(self) -> u64 {
        comp_decode(self.0)
    }

    /// Encodes `value`, attributing a range failure to `field`.
    pub fn encode_field(field: &'static str, value: u64) -> Result<CompT, CodecError> {
        if value > Self::MAX_VALUE {
            return Err(CodecError::Range { field, value });
        }
        Ok(CompT(encode_unchecked(value)))
    }

    pub fn from_value(value: u64) -> Result<CompT, CodecError> {
        Self::encode_field("comp_t", value)
    }
}

impl fmt::Debug for CompT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CompT({:#06x} = {})", self.0, self.value())
    }
}

/// Decodes a raw `comp_t`: `mantissa << (3 * exponent)`.
pub fn comp_decode(raw: u16) -> u64 {
    let exponent = u32::from(raw >> MANTISSA_BITS);
    u64::from(raw & MANTISSA_MASK) << (3 * exponent)
}

/// Canonical `comp_t` encoding of `value`: the smallest exponent whose
/// mantissa fits, with low-order bits dropped (rounded toward zero).
pub fn comp_encode(value: u64) -> Result<u16, CodecError> {
    CompT::from_value(value).map(|c| c.0)
}

fn encode_unchecked(mut value: u64) -> u16 {
    let mut exponent = 0u16;
    while value > u64::from(MANTISSA_MASK) {
        value >>= 3;
        exponent += 1;
    }
    (exponent << MANTISSA_BITS) | value as u16
}

bitflags! {
    /// `ac_flag` bits as written by the Linux kernel.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct AcctFlags: u8 {
        /// F: forked but did not exec.
        const FORK = 0x01;
        /// S: used superuser privileges.
        const SUPERUSER = 0x02;
        const COMPAT = 0x04;
        /// D: dumped core.
        const CORE_DUMP = 0x08;
        /// X: killed by a signal.
        const SIGNALED = 0x10;
        const _ = !0;
    }
}

/// One decoded accounting record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AcctRecord {
    pub flag: AcctFlags,
    pub uid: u16,
    pub gid: u16,
    pub tty: u16,
    /// Process begin time, epoch seconds.
    pub btime: u32,
    pub utime: CompT,
    pub stime: CompT,
    pub etime: CompT,
    pub mem: CompT,
    pub io: CompT,
    pub rw: CompT,
    pub minflt: CompT,
    pub majflt: CompT,
    pub swaps: CompT,
    pub exitcode: u32,
    /// Command name without the NUL terminator; at most [`ACCT_COMM`] bytes.
    pub comm: Vec<u8>,
    pub pad: [u8; PAD_LEN],
}

impl AcctRecord {
    pub fn comm_lossy(&self) -> String {
        String::from_utf8_lossy(&self.comm).into_owned()
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn comp(&mut self) -> CompT {
        CompT(self.u16())
    }
}

/// Decodes the first [`RECORD_LEN`] bytes of `bytes`.
///
/// The command name stops at the first NUL; if all 17 wire bytes are
/// non-NUL only the first 16 are kept.
pub fn decode_record(bytes: &[u8]) -> Result<AcctRecord, CodecError> {
    if bytes.len() < RECORD_LEN {
        return Err(CodecError::TruncatedRecord {
            offset: 0,
            available: bytes.len(),
        });
    }
    let mut c = Cursor { buf: bytes, pos: 0 };
    let flag = AcctFlags::from_bits_retain(c.take::<1>()[0]);
    let uid = c.u16();
    let gid = c.u16();
    let tty = c.u16();
    let btime = c.u32();
    let utime = c.comp();
    let stime = c.comp();
    let etime = c.comp();
    let mem = c.comp();
    let io = c.comp();
    let rw = c.comp();
    let minflt = c.comp();
    let majflt = c.comp();
    let swaps = c.comp();
    let exitcode = c.u32();
    let comm_wire = c.take::<COMM_WIRE_LEN>();
    let pad = c.take::<PAD_LEN>();
    debug_assert_eq!(c.pos, RECORD_LEN);

    let end = comm_wire[..ACCT_COMM]
        .iter()
        .position(|&b| b == 0)
        .unwrap_or(ACCT_COMM);

    Ok(AcctRecord {
        flag,
        uid,
        gid,
        tty,
        btime,
        utime,
        stime,
        etime,
        mem,
        io,
        rw,
        minflt,
        majflt,
        swaps,
        exitcode,
        comm: comm_wire[..end].to_vec(),
        pad,
    })
}

/// Encodes `record` into its 60-byte wire form.
pub fn encode_record(record: &AcctRecord) -> Result<[u8; RECORD_LEN], CodecError> {
    if record.comm.len() > ACCT_COMM {
        return Err(CodecError::FieldOverflow {
            field: "ac_comm",
            len: record.comm.len(),
            limit: ACCT_COMM,
        });
    }
    let mut buf = [0u8; RECORD_LEN];
    let mut pos = 0;
    let mut put = |bytes: &[u8]| {
        buf[pos..pos + bytes.len()].copy_from_slice(bytes);
        pos += bytes.len();
    };
    put(&[record.flag.bits()]);
    put(&record.uid.to_le_bytes());
    put(&record.gid.to_le_bytes());
    put(&record.tty.to_le_bytes());
    put(&record.btime.to_le_bytes());
    for comp in [
        record.utime,
        record.stime,
        record.etime,
        record.mem,
        record.io,
        record.rw,
        record.minflt,
        record.majflt,
        record.swaps,
    ] {
        put(&comp.0.to_le_bytes());
    }
    put(&record.exitcode.to_le_bytes());
    let mut comm = [0u8; COMM_WIRE_LEN];
    comm[..record.comm.len()].copy_from_slice(&record.comm);
    put(&comm);
    put(&record.pad);
    debug_assert_eq!(pos, RECORD_LEN);
    Ok(buf)
}

/// Iterator over the records of a byte stream.
pub struct RecordReader<R> {
    inner: R,
    offset: u64,
    done: bool,
}

impl<R: Read> RecordReader<R> {
    pub fn new(inner: R) -> Self {
        RecordReader {
            inner,
            offset: 0,
            done: false,
        }
    }

    /// Byte offset of the next unread record.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn fill(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(filled)
    }
}

impl<R: Read> Iterator for RecordReader<R> {
    type Item = Result<AcctRecord, CodecError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut buf = [0u8; RECORD_LEN];
        let filled = match self.fill(&mut buf) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        };
        match filled {
            0 => {
                self.done = true;
                None
            }
            RECORD_LEN => {
                self.offset += RECORD_LEN as u64;
                Some(decode_record(&buf))
            }
            available => {
                self.done = true;
                Some(Err(CodecError::TruncatedRecord {
                    offset: self.offset,
                    available,
                }))
            }
        }
    }
}

/// Reads every record from `source`.
pub fn read_stream<R: Read>(source: R) -> Result<Vec<AcctRecord>, CodecError> {
    RecordReader::new(source).collect()
}

/// Record-at-a-time encoder over a byte sink.
pub struct RecordWriter<W> {
    inner: W,
    count: u64,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(inner: W) -> Self {
        RecordWriter { inner, count: 0 }
    }

    pub fn write(&mut self, record: &AcctRecord) -> Result<(), CodecError> {
        let buf = encode_record(record)?;
        self.inner.write_all(&buf)?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> Result<W, CodecError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Writes `records` to `sink` in order, returning the number written.
pub fn write_stream<'a, I, W>(records: I, sink: W) -> Result<u64, CodecError>
where
    I: IntoIterator<Item = &'a AcctRecord>,
    W: Write,
{
    let mut writer = RecordWriter::new(sink);
    for record in records {
        writer.write(record)?;
    }
    let count = writer.count();
    writer.finish()?;
    Ok(count)
}
