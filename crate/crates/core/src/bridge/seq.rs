use super::packet::{DecodeError, Packet};

/// True when `seq` is newer than `last` under 32-bit wraparound:
/// `(seq - last) mod 2^32` lies in `[1, 2^31)`.
pub fn seq_newer(seq: u32, last: u32) -> bool {
    let d = seq.wrapping_sub(last);
    d != 0 && d < 1 << 31
}

/// Receive-side ordering state for one packet stream (latest wins).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeqWindow {
    last: Option<u32>,
    accepted: u64,
    stale: u64,
    corrupt: u64,
}

impl SeqWindow {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts the window as if `seq` had already been accepted.
    pub fn starting_at(seq: u32) -> Self {
        Self {
            last: Some(seq),
            ..Self::default()
        }
    }

    pub fn last_seq(&self) -> Option<u32> {
        self.last
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    /// Duplicates and reordered packets dropped so far.
    pub fn stale(&self) -> u64 {
        self.stale
    }

    pub fn corrupt(&self) -> u64 {
        self.corrupt
    }

    pub fn admit(&mut self, seq: u32) -> bool {
        let fresh = self.last.is_none_or(|last| seq_newer(seq, last));
        if fresh {
            self.last = Some(seq);
            self.accepted += 1;
        } else {
            self.stale += 1;
        }
        fresh
    }
}

/// Decodes one datagram and applies the ordering rule. `Ok(None)` means the
/// packet was valid but stale and has been counted as such.
pub fn endpoint_recv(raw: &[u8], window: &mut SeqWindow) -> Result<Option<Packet>, DecodeError> {
    let packet = Packet::decode(raw).inspect_err(|_| window.corrupt += 1)?;
    Ok(window.admit(packet.seq()).then_some(packet))
}
