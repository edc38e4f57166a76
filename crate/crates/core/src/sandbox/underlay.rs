use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SandboxError;
use crate::sim::{derive_seed, RngStream, SimTime};
use crate::wlan::{simulate_with, Role, Scenario, SimOptions, SimOutput, TrafficLoad};

/// Hidden differences between the nominal deployment and the live network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Added to the nominal path-loss exponent.
    pub exponent_offset: f64,
    /// Per-BSS multiplier on finite offered loads.
    pub traffic_scale: Vec<f64>,
    /// Mixed into every seed used to run the live network.
    pub seed_offset: u64,
    /// Standard deviation of probe measurement error, dB.
    pub probe_noise_db: f64,
}

impl Perturbation {
    pub const EXPONENT_JITTER: f64 = 0.2;
    pub const TRAFFIC_JITTER: f64 = 0.1;
    pub const PROBE_NOISE_DB: f64 = 1.0;

    pub fn none(n_bss: usize) -> Self {
        Self {
            exponent_offset: 0.0,
            traffic_scale: vec![1.0; n_bss],
            seed_offset: 0,
            probe_noise_db: 0.0,
        }
    }

    /// Draws exponent jitter in ±0.2, traffic jitter in ±10% and a seed offset.
    pub fn draw(n_bss: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed, "underlay.perturbation");
        let exponent_offset = rng.uniform_in(-Self::EXPONENT_JITTER, Self::EXPONENT_JITTER);
        let traffic_scale = (0..n_bss)
            .map(|_| 1.0 + rng.uniform_in(-Self::TRAFFIC_JITTER, Self::TRAFFIC_JITTER))
            .collect();
        Self {
            exponent_offset,
            traffic_scale,
            seed_offset: derive_seed(seed, "underlay.seed-offset"),
            probe_noise_db: Self::PROBE_NOISE_DB,
        }
    }
}

/// One received-power measurement between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub from: String,
    pub to: String,
    pub distance_m: f64,
    pub walls: u32,
    pub tx_dbm: f64,
    pub rx_dbm: f64,
}

/// Emulated operative network.
///
/// The live scenario (nominal plus perturbation) stays private; callers only
/// see node layout, offered loads, probe measurements and monitored throughput.
#[derive(Debug, Clone)]
pub struct UnderlayHandle {
    live: Scenario,
    perturbation: Perturbation,
    seed: u64,
}

impl UnderlayHandle {
    /// Perturbed underlay; the perturbation is drawn from `seed`.
    pub fn new(nominal: &Scenario, seed: u64) -> Result<Self, SandboxError> {
        Self::with_perturbation(nominal, Perturbation::draw(nominal.bss.len(), seed), seed)
    }

    /// Underlay that behaves exactly like `nominal`.
    pub fn exact(nominal: &Scenario, seed: u64) -> Result<Self, SandboxError> {
        Self::with_perturbation(nominal, Perturbation::none(nominal.bss.len()), seed)
    }

    pub fn with_perturbation(
        nominal: &Scenario,
        perturbation: Perturbation,
        seed: u64,
    ) -> Result<Self, SandboxError> {
        nominal.validate()?;
        if perturbation.traffic_scale.len() != nominal.bss.len() {
            return Err(SandboxError::Invalid(format!(
                "traffic_scale has {} entries for {} BSSs",
                perturbation.traffic_scale.len(),
                nominal.bss.len()
            )));
        }
        let mut live = nominal.with_default_powers();
        live.channel.exponent += perturbation.exponent_offset;
        for (b, scale) in live.bss.iter_mut().zip(&perturbation.traffic_scale) {
            if let TrafficLoad::Mbps(v) = b.traffic_load {
                b.traffic_load = TrafficLoad::Mbps(v * scale);
            }
        }
        live.validate()?;
        Ok(Self {
            live,
            perturbation,
            seed,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Currently applied per-BSS transmit power.
    pub fn config(&self) -> Vec<f64> {
        self.live.powers()
    }

    pub fn apply(&mut self, powers: &[f64]) -> Result<(), SandboxError> {
        self.live = self.live.with_powers(powers)?;
        Ok(())
    }

    /// Received power between every AP and every other node, in both directions,
    /// with each AP transmitting at the default power.
    pub fn probe(&self) -> Vec<Probe> {
        let mut rng = RngStream::new(self.seed, "underlay.probe");
        let noise = Normal::new(0.0, self.perturbation.probe_noise_db.max(0.0))
            .expect("finite standard deviation");
        let tx = self.live.default_power_dbm;
        let mut out = Vec::new();
        for (a, na) in self.live.nodes.iter().enumerate() {
            for (b, nb) in self.live.nodes.iter().enumerate() {
                if a == b || (na.role != Role::Ap && nb.role != Role::Ap) {
                    continue;
                }
                let err = if self.perturbation.probe_noise_db > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                out.push(Probe {
                    from: na.id.clone(),
                    to: nb.id.clone(),
                    distance_m: self.live.distance(a, b),
                    walls: self.live.walls_between(a, b),
                    tx_dbm: tx,
                    rx_dbm: self.live.rx_power_between(a, b, tx) + err,
                });
            }
        }
        out
    }

    /// Observes the live network for `duration`, sampling throughput every `interval`.
    pub fn monitor(
        &self,
        duration: SimTime,
        interval: SimTime,
        label: &str,
    ) -> Result<SimOutput, SandboxError> {
        let seed = derive_seed(self.seed ^ self.perturbation.seed_offset, label);
        let mut opts = SimOptions::new(duration, seed);
        opts.sample_interval = Some(interval);
        Ok(simulate_with(&self.live, &opts)?)
    }

    /// The live scenario. Inside the crate only, so that feature extraction
    /// cannot read the perturbed channel by accident from outside.
    pub(crate) fn live(&self) -> &Scenario {
        &self.live
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wlan::canonical_scenario;

    #[test]
    fn perturbation_is_bounded_and_seeded() {
        for seed in 0..50 {
            let p = Perturbation::draw(3, seed);
            assert!(p.exponent_offset.abs() <= 0.2);
            assert!(p.traffic_scale.iter().all(|s| (0.9..=1.1).contains(s)));
            assert_eq!(p, Perturbation::draw(3, seed));
        }
        assert_ne!(Perturbation::draw(3, 1), Perturbation::draw(3, 2));
    }

    #[test]
    fn apply_changes_only_powers() {
        let mut u = UnderlayHandle::new(&canonical_scenario(), 4).unwrap();
        assert_eq!(u.config(), vec![23.0, 23.0]);
        let before = u.live().clone();
        u.apply(&[7.0, 11.0]).unwrap();
        assert_eq!(u.config(), vec![7.0, 11.0]);
        assert_eq!(u.live().channel, before.channel);
        assert!(u.apply(&[8.0, 7.0]).is_err());
        assert_eq!(u.config(), vec![7.0, 11.0]);
    }

    #[test]
    fn saturated_loads_stay_saturated() {
        let u = UnderlayHandle::new(&canonical_scenario(), 9).unwrap();
        assert!(u
            .live()
            .bss
            .iter()
            .all(|b| b.traffic_load == TrafficLoad::Saturated));
    }

    #[test]
    fn exact_probes_follow_the_model() {
        let s = canonical_scenario();
        let u = UnderlayHandle::exact(&s, 1).unwrap();
        let probes = u.probe();
        // ordered pairs with at least one AP: 12 minus the 2 STA-STA pairs
        assert_eq!(probes.len(), 10);
        for p in &probes {
            let expect = 23.0 - (40.0 + 35.0 * p.distance_m.log10());
            assert!((p.rx_dbm - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn monitoring_is_reproducible() {
        let u = UnderlayHandle::new(&canonical_scenario(), 3).unwrap();
        let a = u
            .monitor(SimTime::from_secs(2), SimTime::from_millis(500), "pre")
            .unwrap();
        let b = u
            .monitor(SimTime::from_secs(2), SimTime::from_millis(500), "pre")
            .unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.samples.len(), 4);
    }
}
