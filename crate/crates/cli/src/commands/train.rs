use serde_json::json;
use vidcue_core::loss::{accuracy, curve_csv, default_split, mean_loss, train_toy, write_params, LossWeights, TrainConfig};

use crate::cli::TrainArgs;
use crate::context::RunContext;
use crate::error::{CliError, Result};

pub fn train_toy_cmd(ctx: &mut RunContext, args: &TrainArgs) -> Result<()> {
    let weights = LossWeights::parse_ratio(&args.weights).map_err(|e| CliError::Usage(format!("--weights: {e}")))?;
    if !(args.lr.is_finite() && args.lr > 0.0) || args.hidden == 0 {
        return Err(CliError::Usage("--lr and --hidden must be positive".into()));
    }
    let (train, held_out) = default_split(args.corpus_seed);
    let cfg = TrainConfig { steps: args.steps, lr: args.lr, hidden: args.hidden, seed: args.seed };
    let (model, curve) = train_toy(&train, weights, cfg).map_err(|e| CliError::Internal(e.to_string()))?;
    let held_acc = accuracy(&model, &held_out).map_err(|e| CliError::Internal(e.to_string()))?;
    let held_loss = mean_loss(&model, &held_out, weights).map_err(|e| CliError::Internal(e.to_string()))?;
    let last = curve.last().expect("curve has a final point");
    let summary = json!({
        "weights": { "alpha": weights.alpha, "beta": weights.beta },
        "steps": args.steps,
        "train_size": train.len(),
        "held_out_size": held_out.len(),
        "final_train_loss": last.loss,
        "final_train_accuracy": last.accuracy,
        "held_out_loss": held_loss,
        "held_out_accuracy": held_acc,
    });
    ctx.write(args.out.join("curve.csv"), curve_csv(&curve));
    ctx.write(args.out.join("params.bin"), write_params(&model));
    ctx.write(args.out.join("summary.json"), serde_json::to_string_pretty(&summary).expect("json") + "\n");
    ctx.out(format!(
        "alpha:beta {}:{} steps {} train loss {:.6} held-out accuracy {:.3}",
        weights.alpha, weights.beta, args.steps, last.loss.total, held_acc
    ));
    Ok(())
}
