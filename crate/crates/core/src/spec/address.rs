use super::RegisterMapSpec;
use serde::Serialize;

/// One row of the decode table: a bus-addressable settings word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AddressEntry {
    pub slave: usize,
    pub setting: usize,
    pub address: u64,
}

/// Decode table ordered by absolute address.
///
/// Addresses are `base_addr + offset`; with an aligned base this is the
/// slave-select field concatenated with the word offset.
pub fn address_map(spec: &RegisterMapSpec) -> Vec<AddressEntry> {
    let mut map: Vec<AddressEntry> = spec
        .slaves
        .iter()
        .enumerate()
        .flat_map(|(si, s)| {
            s.registers.iter().enumerate().map(move |(ri, r)| AddressEntry {
                slave: si,
                setting: ri,
                address: s.base_addr.wrapping_add(r.offset),
            })
        })
        .collect();
    map.sort_by_key(|e| (e.address, e.slave, e.setting));
    map
}
