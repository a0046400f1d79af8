use std::collections::VecDeque;

use crate::Tick;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Slot {
    pub pkt: u32,
    pub hops: u32,
    pub arrived: Tick,
    /// Arrived by contact or handoff (not generated here).
    pub moved_in: bool,
}

/// FIFO packet buffer addressed by insertion sequence number. Removal from
/// the middle leaves a hole that is reclaimed once it reaches the front.
#[derive(Debug, Clone, Default)]
pub(crate) struct Buffer {
    base: u64,
    slots: VecDeque<Option<Slot>>,
    pub occupancy: u64,
    pub max_occupancy: u64,
    pub len: usize,
}

impl Buffer {
    pub fn end_seq(&self) -> u64 {
        self.base + self.slots.len() as u64
    }

    pub fn first_seq(&self) -> u64 {
        self.base
    }

    pub fn get(&self, seq: u64) -> Option<&Slot> {
        let i = seq.checked_sub(self.base)?;
        self.slots.get(i as usize)?.as_ref()
    }

    pub fn push(&mut self, slot: Slot, size: u64) -> u64 {
        self.slots.push_back(Some(slot));
        self.occupancy += size;
        self.max_occupancy = self.max_occupancy.max(self.occupancy);
        self.len += 1;
        self.end_seq() - 1
    }

    pub fn remove(&mut self, seq: u64, size: u64) -> Slot {
        let i = (seq - self.base) as usize;
        let slot = self.slots[i].take().expect("slot occupied");
        self.occupancy -= size;
        self.len -= 1;
        while matches!(self.slots.front(), Some(None)) {
            self.slots.pop_front();
            self.base += 1;
        }
        slot
    }

    /// Empties the buffer, returning the packets in FIFO order.
    pub fn drain(&mut self) -> Vec<Slot> {
        let out: Vec<Slot> = self.slots.drain(..).flatten().collect();
        self.base += out.len() as u64;
        self.base = self.base.max(self.end_seq());
        self.occupancy = 0;
        self.len = 0;
        out
    }
}
