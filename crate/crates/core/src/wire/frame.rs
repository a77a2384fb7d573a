//! Length-delimited framing: a 4-byte little-endian length, then one JSON record.

use std::io::{self, Read, Write};

use crate::wire::{WireError, WireMessage};

/// Frames longer than this are refused rather than allocated.
pub const MAX_FRAME: u32 = 1 << 20;

/// Writes one frame with a single `write_all`.
pub fn write_frame<W: Write>(w: &mut W, msg: &WireMessage) -> Result<(), WireError> {
    let body = serde_json::to_vec(msg)?;
    let len = u32::try_from(body.len())
        .ok()
        .filter(|&n| n <= MAX_FRAME)
        .ok_or(WireError::FrameTooLarge(body.len() as u64))?;
    let mut buf = Vec::with_capacity(4 + body.len());
    buf.extend_from_slice(&len.to_le_bytes());
    buf.extend_from_slice(&body);
    w.write_all(&buf)?;
    Ok(())
}

/// Reads one frame. A clean end of stream before the length prefix gives `None`.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<WireMessage>, WireError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(len);
    if len > MAX_FRAME {
        return Err(WireError::FrameTooLarge(u64::from(len)));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    let msg: WireMessage = serde_json::from_slice(&body)?;
    msg.validate()?;
    Ok(Some(msg))
}
