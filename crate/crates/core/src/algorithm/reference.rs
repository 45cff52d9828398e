use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Algorithm, AlgorithmError};
use crate::stream::Event;

/// Always answers `v`.
#[derive(Debug, Clone)]
pub struct ConstantPredictor {
    value: f64,
    name: String,
}

impl ConstantPredictor {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            name: format!("constant:{value}"),
        }
    }
}

impl Algorithm for ConstantPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn learn(&mut self, _: &Event) -> Result<(), AlgorithmError> {
        Ok(())
    }

    fn conformance(&mut self, _: &Event) -> Result<f64, AlgorithmError> {
        Ok(self.value)
    }
}

/// Uniform noise in `[0, 1)`, reproducible from the seed.
#[derive(Debug, Clone)]
pub struct RandomPredictor {
    rng: ChaCha8Rng,
    name: String,
}

impl RandomPredictor {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            name: format!("random:{seed}"),
        }
    }
}

impl Algorithm for RandomPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn learn(&mut self, _: &Event) -> Result<(), AlgorithmError> {
        Ok(())
    }

    fn conformance(&mut self, _: &Event) -> Result<f64, AlgorithmError> {
        Ok(self.rng.gen::<f64>())
    }
}

/// Echoes the ground truth carried by the event. Only usable when the
/// harness delivers labels, i.e. never in scored mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePredictor;

impl Algorithm for OraclePredictor {
    fn name(&self) -> &str {
        "oracle"
    }

    fn learn(&mut self, _: &Event) -> Result<(), AlgorithmError> {
        Ok(())
    }

    fn conformance(&mut self, event: &Event) -> Result<f64, AlgorithmError> {
        event.gt().ok_or_else(|| {
            AlgorithmError::Configuration(
                "oracle needs events that carry gt (unscored mode)".into(),
            )
        })
    }

    fn requires_ground_truth(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{stream_epoch, GT_KEY};

    #[test]
    fn constant_and_random() {
        let e = Event::new("1", "a", stream_epoch());
        assert_eq!(ConstantPredictor::new(0.5).conformance(&e).unwrap(), 0.5);
        let run = |seed| {
            let mut r = RandomPredictor::new(seed);
            (0..50)
                .map(|_| r.conformance(&e).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
        assert!(run(3).iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn oracle_reads_gt() {
        let mut e = Event::new("1", "a", stream_epoch());
        assert!(matches!(
            OraclePredictor.conformance(&e),
            Err(AlgorithmError::Configuration(_))
        ));
        e.attributes.insert(GT_KEY.into(), 0.5.into());
        assert_eq!(OraclePredictor.conformance(&e).unwrap(), 0.5);
    }
}
