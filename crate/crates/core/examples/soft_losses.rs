// The four loss modes on one set of logits, and their gradients.

use soft_augment::loss::{make_soft_target, soft_loss, soft_loss_grad};
use soft_augment::softening::Confidence;
use soft_augment::{LossMode, Result};

pub fn run() -> Result<()> {
    let logits = [2.0, 0.5, -1.0, 0.0];
    let p = Confidence::new(0.7)?;
    println!("soft target p=0.7: {:?}", make_soft_target(0, p, 4)?.probs());
    for mode in LossMode::ALL {
        let loss = soft_loss(&logits, 0, p, mode)?;
        let grad = soft_loss_grad(&logits, 0, p, mode)?;
        let grad: Vec<String> = grad.iter().map(|g| format!("{g:+.4}")).collect();
        println!(
            "{:<16} loss {loss:.6}  grad [{}]",
            format!("{mode:?}"),
            grad.join(", ")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
