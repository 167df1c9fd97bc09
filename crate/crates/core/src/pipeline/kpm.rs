//! Per-slot cross-layer telemetry and the sliding throughput windows.

use alloc::collections::VecDeque;
use core::str::FromStr;

/// One slot of telemetry. Throughputs are in Mbps, byte counts per slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KpmRecord {
    pub slot_index: u64,
    /// Decoded PHY bytes since the run started over elapsed time.
    pub phy_throughput: f64,
    pub mcs_index: u8,
    pub pdu_length: u64,
    pub ndi: u8,
    pub rsrp: f64,
    pub code_rate: f64,
    pub qam_order: u8,
    pub num_cb: u64,
    pub tb_size: u64,
    /// Post-equalization SINR seen by the PHY.
    pub sinr_db: f64,
    /// MAC-side SNR measured from the DMRS residual of the downstream estimate.
    pub snr_db: f64,
    pub mac_throughput: f64,
    pub lcid4_throughput: f64,
    pub mac_rx_bytes: u64,
    pub lcid4_rx_bytes: u64,
}

/// Named KPM column. Declaration order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kpm {
    PhyThroughput,
    McsIndex,
    PduLength,
    Ndi,
    Rsrp,
    CodeRate,
    QamOrder,
    NumCb,
    TbSize,
    SinrDb,
    SnrDb,
    MacThroughput,
    Lcid4Throughput,
    MacRxBytes,
    Lcid4RxBytes,
}

impl Kpm {
    pub const ALL: [Kpm; 15] = [
        Kpm::PhyThroughput,
        Kpm::McsIndex,
        Kpm::PduLength,
        Kpm::Ndi,
        Kpm::Rsrp,
        Kpm::CodeRate,
        Kpm::QamOrder,
        Kpm::NumCb,
        Kpm::TbSize,
        Kpm::SinrDb,
        Kpm::SnrDb,
        Kpm::MacThroughput,
        Kpm::Lcid4Throughput,
        Kpm::MacRxBytes,
        Kpm::Lcid4RxBytes,
    ];

    /// PHY-side candidates considered for correlation (no PHY throughput).
    pub const PHY_CANDIDATES: [Kpm; 9] = [
        Kpm::PduLength,
        Kpm::CodeRate,
        Kpm::SinrDb,
        Kpm::QamOrder,
        Kpm::NumCb,
        Kpm::McsIndex,
        Kpm::TbSize,
        Kpm::Ndi,
        Kpm::Rsrp,
    ];

    /// MAC-side candidates.
    pub const MAC_CANDIDATES: [Kpm; 5] = [
        Kpm::Lcid4RxBytes,
        Kpm::Lcid4Throughput,
        Kpm::MacRxBytes,
        Kpm::SnrDb,
        Kpm::MacThroughput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kpm::PhyThroughput => "phy_throughput",
            Kpm::McsIndex => "mcs_index",
            Kpm::PduLength => "pdu_length",
            Kpm::Ndi => "ndi",
            Kpm::Rsrp => "rsrp",
            Kpm::CodeRate => "code_rate",
            Kpm::QamOrder => "qam_order",
            Kpm::NumCb => "num_cb",
            Kpm::TbSize => "tb_size",
            Kpm::SinrDb => "sinr",
            Kpm::SnrDb => "snr_db",
            Kpm::MacThroughput => "mac_throughput",
            Kpm::Lcid4Throughput => "lcid4_throughput",
            Kpm::MacRxBytes => "mac_rx_bytes",
            Kpm::Lcid4RxBytes => "lcid4_rx_bytes",
        }
    }

    pub fn value(self, r: &KpmRecord) -> f64 {
        match self {
            Kpm::PhyThroughput => r.phy_throughput,
            Kpm::McsIndex => r.mcs_index as f64,
            Kpm::PduLength => r.pdu_length as f64,
            Kpm::Ndi => r.ndi as f64,
            Kpm::Rsrp => r.rsrp,
            Kpm::CodeRate => r.code_rate,
            Kpm::QamOrder => r.qam_order as f64,
            Kpm::NumCb => r.num_cb as f64,
            Kpm::TbSize => r.tb_size as f64,
            Kpm::SinrDb => r.sinr_db,
            Kpm::SnrDb => r.snr_db,
            Kpm::MacThroughput => r.mac_throughput,
            Kpm::Lcid4Throughput => r.lcid4_throughput,
            Kpm::MacRxBytes => r.mac_rx_bytes as f64,
            Kpm::Lcid4RxBytes => r.lcid4_rx_bytes as f64,
        }
    }
}

impl FromStr for Kpm {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kpm::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| crate::Error::Lookup(alloc::format!("unknown KPM '{s}'")))
    }
}

impl core::fmt::Display for Kpm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Byte rate over the last `len` slots, or since creation when cumulative.
#[derive(Debug, Clone)]
pub struct ThroughputWindow {
    len: Option<usize>,
    bytes: VecDeque<u64>,
    sum: u64,
    count: u64,
    total: u64,
    slot_us: f64,
}

impl ThroughputWindow {
    pub fn new(len: usize, slot_us: f64) -> Self {
        let len = len.max(1);
        ThroughputWindow {
            len: Some(len),
            bytes: VecDeque::with_capacity(len),
            sum: 0,
            count: 0,
            total: 0,
            slot_us,
        }
    }

    pub fn cumulative(slot_us: f64) -> Self {
        ThroughputWindow {
            len: None,
            bytes: VecDeque::new(),
            sum: 0,
            count: 0,
            total: 0,
            slot_us,
        }
    }

    pub fn push(&mut self, bytes: u64) {
        match self.len {
            Some(len) => {
                if self.bytes.len() == len {
                    self.sum -= self.bytes.pop_front().unwrap_or(0);
                }
                self.bytes.push_back(bytes);
                self.count = self.bytes.len() as u64;
            }
            None => self.count += 1,
        }
        self.sum += bytes;
        self.total += bytes;
    }

    /// Mbps over the slots currently covered.
    pub fn rate_mbps(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum as f64 * 8.0 / (self.count as f64 * self.slot_us)
    }

    /// Bytes pushed since creation.
    pub fn total_bytes(&self) -> u64 {
        self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in Kpm::ALL {
            assert_eq!(k.name().parse::<Kpm>().unwrap(), k);
        }
        assert!("bogus".parse::<Kpm>().is_err());
    }

    #[test]
    fn window_slides() {
        let mut w = ThroughputWindow::new(2, 500.0);
        w.push(500);
        assert!((w.rate_mbps() - 8.0).abs() < 1e-12);
        w.push(0);
        w.push(1000);
        // window holds [0, 1000]
        assert!((w.rate_mbps() - 8.0).abs() < 1e-12);
        assert_eq!(w.total_bytes(), 1500);
        let mut c = ThroughputWindow::cumulative(500.0);
        c.push(500);
        c.push(0);
        assert!((c.rate_mbps() - 4.0).abs() < 1e-12);
    }
}
