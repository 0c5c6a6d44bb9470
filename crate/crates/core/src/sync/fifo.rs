use crate::clocks::Provenance;

/// Where a buffered byte came from, trimmed to what alignment checks need.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SlotTag {
    pub frame: u32,
    pub line: u16,
    pub sample: u16,
}

impl From<&Provenance> for SlotTag {
    fn from(p: &Provenance) -> SlotTag {
        SlotTag {
            frame: p.frame_index,
            line: p.line,
            sample: p.sample,
        }
    }
}

/// One frame of active picture bytes, written at the source clock and read
/// at the reference clock.
#[derive(Clone, Debug)]
pub struct CircularFifo {
    capacity: usize,
    data: Vec<u8>,
    tags: Vec<SlotTag>,
    write_index: usize,
    read_index: usize,
    write_enabled: bool,
    read_enabled: bool,
    frames_written: u64,
    frames_read: u64,
    write_resets: u64,
    read_resets: u64,
}

impl CircularFifo {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> CircularFifo {
        assert!(capacity > 0, "fifo capacity must be positive");
        CircularFifo {
            capacity,
            data: vec![0; capacity],
            tags: vec![SlotTag::default(); capacity],
            write_index: 0,
            read_index: 0,
            write_enabled: false,
            read_enabled: false,
            frames_written: 0,
            frames_read: 0,
            write_resets: 0,
            read_resets: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn write_index(&self) -> usize {
        self.write_index
    }

    pub fn read_index(&self) -> usize {
        self.read_index
    }

    pub fn write_enabled(&self) -> bool {
        self.write_enabled
    }

    pub fn read_enabled(&self) -> bool {
        self.read_enabled
    }

    /// Complete passes of the write pointer over the buffer.
    pub fn frames_written(&self) -> u64 {
        self.frames_written
    }

    pub fn frames_read(&self) -> u64 {
        self.frames_read
    }

    /// Number of times the channel's frame start rewound the write pointer.
    pub fn write_resets(&self) -> u64 {
        self.write_resets
    }

    pub fn read_resets(&self) -> u64 {
        self.read_resets
    }

    /// Every slot holds a byte from a real frame.
    pub fn is_primed(&self) -> bool {
        self.frames_written > 0
    }

    pub fn start_write_frame(&mut self) {
        self.write_index = 0;
        self.write_enabled = true;
        self.write_resets += 1;
    }

    pub fn start_read_frame(&mut self) {
        self.read_index = 0;
        self.read_enabled = true;
        self.read_resets += 1;
    }

    /// Stores a byte if writing is enabled. Returns whether it was stored.
    #[inline]
    pub fn write(&mut self, value: u8, tag: SlotTag) -> bool {
        if !self.write_enabled {
            return false;
        }
        self.data[self.write_index] = value;
        self.tags[self.write_index] = tag;
        self.write_index += 1;
        if self.write_index == self.capacity {
            self.write_index = 0;
            self.frames_written += 1;
        }
        true
    }

    /// Reads the slot under the read pointer and advances it, or `None`
    /// before the first read frame start.
    #[inline]
    pub fn read(&mut self) -> Option<(u8, SlotTag)> {
        if !self.read_enabled {
            return None;
        }
        let out = (self.data[self.read_index], self.tags[self.read_index]);
        self.advance_read();
        Some(out)
    }

    /// Moves the read pointer without using the slot.
    #[inline]
    pub fn skip(&mut self) {
        if self.read_enabled {
            self.advance_read();
        }
    }

    #[inline]
    fn advance_read(&mut self) {
        self.read_index += 1;
        if self.read_index == self.capacity {
            self.read_index = 0;
            self.frames_read += 1;
        }
    }
}
