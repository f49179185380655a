use crate::error::{Error, Result};

/// Accelerator parameters. Defaults describe a 256-PE edge accelerator with
/// a 256 KiB global buffer, a multicast-capable NoC and 1-byte operands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareConfig {
    pub num_pes: u64,
    /// Bytes per cycle shared by distribution and collection.
    pub noc_bandwidth: u64,
    pub multicast: bool,
    pub global_buffer_bytes: u64,
    pub pe_buffer_bytes: u64,
    pub element_bytes: u64,
    pub clock_ghz: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        HardwareConfig {
            num_pes: 256,
            noc_bandwidth: 256,
            multicast: true,
            global_buffer_bytes: 256 * 1024,
            pe_buffer_bytes: 1024,
            element_bytes: 1,
            clock_ghz: 1.0,
        }
    }
}

impl HardwareConfig {
    pub fn with_bandwidth(mut self, bytes_per_cycle: u64) -> Self {
        self.noc_bandwidth = bytes_per_cycle;
        self
    }

    pub fn with_pes(mut self, num_pes: u64) -> Self {
        self.num_pes = num_pes;
        self
    }

    pub fn with_multicast(mut self, on: bool) -> Self {
        self.multicast = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("num_pes", self.num_pes),
            ("noc_bandwidth", self.noc_bandwidth),
            ("global_buffer_bytes", self.global_buffer_bytes),
            ("pe_buffer_bytes", self.pe_buffer_bytes),
            ("element_bytes", self.element_bytes),
        ] {
            if v == 0 {
                return Err(Error::InvalidHardware(format!("{name} must be at least 1")));
            }
        }
        if !(self.clock_ghz > 0.0) {
            return Err(Error::InvalidHardware("clock_ghz must be positive".into()));
        }
        Ok(())
    }

    /// Bandwidth in GB/s at the configured clock.
    pub fn bandwidth_gbps(&self) -> f64 {
        self.noc_bandwidth as f64 * self.clock_ghz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let hw = HardwareConfig::default();
        assert_eq!(hw.num_pes, 256);
        assert_eq!(hw.global_buffer_bytes, 262_144);
        assert!(hw.multicast);
        assert_eq!(hw.element_bytes, 1);
        assert_eq!(hw.with_bandwidth(4).bandwidth_gbps(), 4.0);
        hw.validate().unwrap();
        assert!(hw.with_pes(0).validate().is_err());
    }
}
