use serde::Serialize;
use std::fmt;
use std::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    WriteIssued,
    WriteAccepted,
    ConfigChanged,
    ValueSampled,
    ReadyChanged,
    SwapPerformed,
    Violation,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::WriteIssued => "write_issued",
            TraceKind::WriteAccepted => "write_accepted",
            TraceKind::ConfigChanged => "config_changed",
            TraceKind::ValueSampled => "value_sampled",
            TraceKind::ReadyChanged => "ready_changed",
            TraceKind::SwapPerformed => "swap_performed",
            TraceKind::Violation => "violation",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Violation reasons. For `violation` trace rows the `data` column carries
/// [`ViolationKind::code`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A settings word changed while its slave was not Ready.
    ConfigChangedWhileBusy,
    /// Logic sampled a value that was never completely written.
    TornWord,
    WriteTimeout,
    UnmappedWrite,
    SwapRefused,
}

impl ViolationKind {
    pub fn code(self) -> u64 {
        match self {
            ViolationKind::ConfigChangedWhileBusy => 1,
            ViolationKind::TornWord => 2,
            ViolationKind::WriteTimeout => 3,
            ViolationKind::UnmappedWrite => 4,
            ViolationKind::SwapRefused => 5,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        [
            ViolationKind::ConfigChangedWhileBusy,
            ViolationKind::TornWord,
            ViolationKind::WriteTimeout,
            ViolationKind::UnmappedWrite,
            ViolationKind::SwapRefused,
        ]
        .into_iter()
        .find(|k| k.code() == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub time_ps: u64,
    pub kind: TraceKind,
    pub slave: Option<usize>,
    pub addr: Option<u64>,
    pub data: Option<u64>,
}

/// A settings word at reset: `(slave, absolute address, value)`.
pub type InitialWord = (usize, u64, u64);

/// Simulation record: the reset image followed by every event in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub initial: Vec<InitialWord>,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn of_kind(&self, kind: TraceKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn violations(&self) -> impl Iterator<Item = (ViolationKind, &TraceEvent)> {
        self.of_kind(TraceKind::Violation)
            .filter_map(|e| e.data.and_then(ViolationKind::from_code).map(|k| (k, e)))
    }

    /// CSV with header `time_ps,kind,slave,addr,data`; absent fields are empty.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_ps", "kind", "slave", "addr", "data"])?;
        let opt = |v: Option<u64>| v.map(|n| n.to_string()).unwrap_or_default();
        for e in &self.events {
            w.write_record([
                e.time_ps.to_string(),
                e.kind.as_str().to_string(),
                opt(e.slave.map(|s| s as u64)),
                opt(e.addr),
                opt(e.data),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// SHA-256 over the reset image and the CSV rendering.
    pub fn hash(&self) -> String {
        let mut bytes = Vec::new();
        for (s, a, v) in &self.initial {
            bytes.extend_from_slice(format!("{s},{a},{v}\n").as_bytes());
        }
        bytes.extend_from_slice(self.to_csv().as_bytes());
        crate::sha256_hex(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = Trace {
            initial: vec![],
            events: vec![
                TraceEvent {
                    time_ps: 10,
                    kind: TraceKind::WriteAccepted,
                    slave: Some(1),
                    addr: Some(64),
                    data: Some(0xAB),
                },
                TraceEvent {
                    time_ps: 20,
                    kind: TraceKind::Violation,
                    slave: None,
                    addr: Some(7),
                    data: Some(ViolationKind::UnmappedWrite.code()),
                },
            ],
        };
        assert_eq!(
            t.to_csv(),
            "time_ps,kind,slave,addr,data\n10,write_accepted,1,64,171\n20,violation,,7,4\n"
        );
        assert_eq!(t.violations().next().unwrap().0, ViolationKind::UnmappedWrite);
    }
}
