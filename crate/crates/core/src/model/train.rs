use std::time::Instant;

use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::aae::{points_to_matrix, AAEModel};
use super::config::AAEConfig;
use super::loss::{adversarial_loss, adversarial_loss_gradient, generator_loss, reconstruction_loss};
use crate::data::{Dataset, FeatureCodec};
use crate::error::{Error, Result};
use crate::neural::{AdamState, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub reconstruction_loss: f64,
    pub adversarial_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch at which early stopping fired, if it did.
    pub early_stop_epoch: Option<usize>,
    /// Epoch whose parameters were kept (lowest reconstruction loss).
    pub best_epoch: usize,
}

impl TrainingLog {
    /// `epoch,L_RE,L_DI,seconds` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,L_RE,L_DI,seconds\n");
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                r.epoch, r.reconstruction_loss, r.adversarial_loss, r.seconds
            ));
        }
        out
    }
}

/// Per-epoch outcome of [`Trainer::train_epoch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub reconstruction_loss: f64,
    pub adversarial_loss: f64,
    pub reconstruction_steps: usize,
    pub regularization_steps: usize,
}

fn optimizer(net: &Network, lr: f64) -> Result<AdamState> {
    AdamState::new(&net.parameter_shapes(), lr)
}

/// Single owner of a model under training: optimiser states, the training
/// RNG and the running log.
pub struct Trainer {
    model: AAEModel,
    config: AAEConfig,
    gamma: f64,
    encoder_opt: AdamState,
    decoder_opt: AdamState,
    discriminator_opt: AdamState,
    generator_opt: AdamState,
    rng: ChaCha8Rng,
    data: Array2<f64>,
    log: TrainingLog,
    epochs_run: usize,
}

impl Trainer {
    /// Fits the codec on `dataset`, initialises the networks from
    /// `config.seed` and encodes the training matrix once.
    pub fn new(dataset: &Dataset, config: AAEConfig) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::InsufficientData("cannot train on an empty dataset".into()));
        }
        let codec = FeatureCodec::fit(dataset)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let model = AAEModel::new(codec, &config, &mut rng)?;
        Self::with_model(model, dataset, config, rng)
    }

    /// Continues training an existing model.
    pub fn resume(model: AAEModel, dataset: &Dataset, config: AAEConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::with_model(model, dataset, config, rng)
    }

    fn with_model(model: AAEModel, dataset: &Dataset, config: AAEConfig, rng: ChaCha8Rng) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::InsufficientData("cannot train on an empty dataset".into()));
        }
        if dataset.schema != *model.codec.schema() {
            return Err(Error::dim("dataset schema differs from the model schema"));
        }
        let data = model.codec.encode_matrix(&dataset.entries)?;
        let gamma = config.gamma.resolve(model.codec.schema());
        Ok(Self {
            encoder_opt: optimizer(&model.encoder, config.lr_encoder)?,
            decoder_opt: optimizer(&model.decoder, config.lr_decoder)?,
            discriminator_opt: optimizer(&model.discriminator, config.lr_discriminator)?,
            generator_opt: optimizer(&model.encoder, config.lr_encoder)?,
            gamma,
            model,
            config,
            rng,
            data,
            log: TrainingLog::default(),
            epochs_run: 0,
        })
    }

    pub fn model(&self) -> &AAEModel {
        &self.model
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn config(&self) -> &AAEConfig {
        &self.config
    }

    pub fn into_model(self) -> AAEModel {
        self.model
    }

    /// One pass over the shuffled data. Every mini-batch runs, in order, a
    /// reconstruction step (encoder + decoder), a discriminator step against
    /// fresh prior samples, and a generator step that updates the encoder to
    /// raise the discriminator's score on its codes.
    pub fn train_epoch(&mut self) -> Result<EpochStats> {
        let epoch = self.epochs_run + 1;
        let n = self.data.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);

        let mut stats = EpochStats {
            reconstruction_loss: 0.0,
            adversarial_loss: 0.0,
            reconstruction_steps: 0,
            regularization_steps: 0,
        };
        for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let batch = self.data.select(Axis(0), chunk);
            let diverged = |message: String| Error::Divergence {
                epoch,
                batch: b,
                message,
            };

            let l_re = self.reconstruction_step(&batch)?;
            if !l_re.is_finite() {
                return Err(diverged(format!("reconstruction loss {l_re}")));
            }
            stats.reconstruction_loss += l_re;
            stats.reconstruction_steps += 1;

            let l_di = self.discriminator_step(&batch)?;
            if !l_di.is_finite() {
                return Err(diverged(format!("adversarial loss {l_di}")));
            }
            let l_g = self.generator_step(&batch)?;
            if !l_g.is_finite() {
                return Err(diverged(format!("generator loss {l_g}")));
            }
            stats.adversarial_loss += l_di;
            stats.regularization_steps += 1;
        }
        stats.reconstruction_loss /= stats.reconstruction_steps as f64;
        stats.adversarial_loss /= stats.regularization_steps as f64;
        self.epochs_run = epoch;
        Ok(stats)
    }

    fn reconstruction_step(&mut self, batch: &Array2<f64>) -> Result<f64> {
        let m = &mut self.model;
        let enc = m.encoder.forward_batch(batch.view())?;
        let dec = m.decoder.forward_batch(enc.output().view())?;
        let loss = reconstruction_loss(m.codec.schema(), batch.view(), dec.output().view(), self.gamma)?;
        let dec_grads = m.decoder.backward(&dec, loss.gradient.view(), true)?;
        let dz = dec_grads.input.as_ref().expect("input gradient requested");
        let enc_grads = m.encoder.backward(&enc, dz.view(), false)?;
        self.decoder_opt
            .step(&mut m.decoder.parameters_mut(), &dec_grads.as_slices())?;
        self.encoder_opt
            .step(&mut m.encoder.parameters_mut(), &enc_grads.as_slices())?;
        Ok(loss.loss)
    }

    fn discriminator_step(&mut self, batch: &Array2<f64>) -> Result<f64> {
        let n = batch.nrows();
        let prior = points_to_matrix(&self.model.prior.sample(n, &mut self.rng));
        let m = &mut self.model;
        let posterior = m.encoder.predict_batch(batch.view())?;
        let stacked = concatenate(Axis(0), &[prior.view(), posterior.view()])
            .map_err(|e| Error::dim(e.to_string()))?;
        let trace = m.discriminator.forward_batch(stacked.view())?;
        let d: Vec<f64> = trace.output().iter().copied().collect();
        let (d_prior, d_post) = d.split_at(n);
        let loss = adversarial_loss(d_prior, d_post);
        let (g_prior, g_post) = adversarial_loss_gradient(d_prior, d_post);
        let grad_out = Array2::from_shape_vec((2 * n, 1), [g_prior, g_post].concat())
            .map_err(|e| Error::dim(e.to_string()))?;
        let grads = m.discriminator.backward(&trace, grad_out.view(), false)?;
        self.discriminator_opt
            .step(&mut m.discriminator.parameters_mut(), &grads.as_slices())?;
        Ok(loss)
    }

    fn generator_step(&mut self, batch: &Array2<f64>) -> Result<f64> {
        let m = &mut self.model;
        let enc = m.encoder.forward_batch(batch.view())?;
        let disc = m.discriminator.forward_batch(enc.output().view())?;
        let d: Vec<f64> = disc.output().iter().copied().collect();
        let (loss, grad) = generator_loss(&d);
        let grad_out = Array2::from_shape_vec((d.len(), 1), grad).map_err(|e| Error::dim(e.to_string()))?;
        let disc_grads = m.discriminator.backward(&disc, grad_out.view(), true)?;
        let dz = disc_grads.input.as_ref().expect("input gradient requested");
        let enc_grads = m.encoder.backward(&enc, dz.view(), false)?;
        self.generator_opt
            .step(&mut m.encoder.parameters_mut(), &enc_grads.as_slices())?;
        Ok(loss)
    }

    /// Runs epochs until `max_epochs` or until the best reconstruction loss
    /// fails to improve by the relative `tolerance` for `patience`
    /// consecutive epochs. The model is left at the best epoch's parameters.
    pub fn run(&mut self) -> Result<()> {
        self.run_with(|_| {})
    }

    /// [`Trainer::run`] with a callback after every logged epoch.
    pub fn run_with(&mut self, mut on_epoch: impl FnMut(&EpochRecord)) -> Result<()> {
        let mut best_loss = f64::INFINITY;
        let mut best_model = self.model.clone();
        let mut reference = f64::INFINITY;
        let mut stale = 0usize;
        while self.epochs_run < self.config.max_epochs {
            let started = Instant::now();
            let stats = self.train_epoch()?;
            let record = EpochRecord {
                epoch: self.epochs_run,
                reconstruction_loss: stats.reconstruction_loss,
                adversarial_loss: stats.adversarial_loss,
                seconds: started.elapsed().as_secs_f64(),
            };
            self.log.epochs.push(record);
            on_epoch(&record);

            let loss = stats.reconstruction_loss;
            if loss < best_loss {
                best_loss = loss;
                best_model = self.model.clone();
                self.log.best_epoch = self.epochs_run;
            }
            let improved = if reference.is_finite() {
                (reference - loss) / reference.abs() >= self.config.tolerance
            } else {
                true
            };
            if improved {
                reference = loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= self.config.patience {
                    self.log.early_stop_epoch = Some(self.epochs_run);
                    break;
                }
            }
        }
        self.model = best_model;
        Ok(())
    }
}

/// Trains a fresh model on `dataset`. On divergence the error is returned
/// and the partial log is lost; use [`Trainer`] directly to keep it.
pub fn train(dataset: &Dataset, config: AAEConfig) -> Result<(AAEModel, TrainingLog)> {
    let mut trainer = Trainer::new(dataset, config)?;
    trainer.run()?;
    let log = trainer.log().clone();
    Ok((trainer.into_model(), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{desk_spec, synth_generate};

    fn small_config() -> AAEConfig {
        AAEConfig {
            tau: 9,
            encoder_hidden: vec![16, 8],
            decoder_hidden: vec![8, 16],
            discriminator_hidden: vec![16, 8],
            ..AAEConfig::default()
        }
    }

    #[test]
    fn step_counts_per_epoch() {
        let ds = synth_generate(&desk_spec(), 256, 1).unwrap();
        let mut t = Trainer::new(&ds, small_config()).unwrap();
        let s = t.train_epoch().unwrap();
        assert_eq!(s.reconstruction_steps, 2);
        assert_eq!(s.regularization_steps, 2);

        let ds = synth_generate(&desk_spec(), 300, 1).unwrap();
        let mut t = Trainer::new(&ds, small_config()).unwrap();
        let s = t.train_epoch().unwrap();
        assert_eq!(s.reconstruction_steps, 3);
        assert_eq!(s.regularization_steps, 3);
    }

    #[test]
    fn zero_learning_rates_freeze_parameters() {
        let ds = synth_generate(&desk_spec(), 256, 2).unwrap();
        let cfg = AAEConfig {
            lr_encoder: 0.0,
            lr_decoder: 0.0,
            lr_discriminator: 0.0,
            ..small_config()
        };
        let mut t = Trainer::new(&ds, cfg).unwrap();
        let before = t.model().clone();
        t.train_epoch().unwrap();
        assert_eq!(&before, t.model());
    }

    #[test]
    fn plateau_stops_after_patience() {
        let ds = synth_generate(&desk_spec(), 256, 3).unwrap();
        let cfg = AAEConfig {
            lr_encoder: 0.0,
            lr_decoder: 0.0,
            lr_discriminator: 0.0,
            patience: 10,
            tolerance: 1e-4,
            ..small_config()
        };
        let (_, log) = train(&ds, cfg).unwrap();
        assert_eq!(log.early_stop_epoch, Some(11));
        assert_eq!(log.epochs.len(), 11);
    }

    #[test]
    fn single_epoch_budget() {
        let ds = synth_generate(&desk_spec(), 128, 4).unwrap();
        let cfg = AAEConfig {
            max_epochs: 1,
            ..small_config()
        };
        let (_, log) = train(&ds, cfg).unwrap();
        assert_eq!(log.epochs.len(), 1);
        assert!(log.to_csv().starts_with("epoch,L_RE,L_DI,seconds\n1,"));
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = synth_generate(&desk_spec(), 0, 1).unwrap();
        assert!(matches!(
            Trainer::new(&ds, small_config()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn same_seed_same_parameters() {
        let ds = synth_generate(&desk_spec(), 300, 5).unwrap();
        let cfg = AAEConfig {
            max_epochs: 2,
            ..small_config()
        };
        let (a, _) = train(&ds, cfg.clone()).unwrap();
        let (b, _) = train(&ds, cfg).unwrap();
        assert_eq!(a, b);
    }
}
