//! LDA of the latent codes of a briefly trained augmented model and the
//! matching autoencoder on the chiller data, written as SVG scatters.
//!
//! cargo run --release --example latent_lda -- [output_dir]

use oodfdd::data::DatasetKind;
use oodfdd::experiment::{group_names, latent_lda, prepare, train_model, ExperimentConfig};
use oodfdd::model::ModelKind;
use oodfdd::report::{emit_scatter_svg, write_text};

fn main() -> oodfdd::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out".into()));
    let mut cfg = ExperimentConfig::defaults(DatasetKind::Chiller);
    cfg.chiller_n_per_class = 150;
    cfg.pretrain_epochs = 10;
    cfg.epochs = 40;
    let prepared = prepare(&cfg)?;
    std::fs::create_dir_all(&out)?;
    for kind in [ModelKind::Augmented, ModelKind::AutoencoderOnly] {
        let (net, _) = train_model(&cfg, kind, &prepared.train)?;
        let (lda, projected, separation) = latent_lda(&net, &prepared.test)?;
        println!("{kind}: eigenvalues {:.3?}, separation {separation:.4}", lda.eigenvalues);
        let svg = emit_scatter_svg(&projected, &group_names(&prepared.test), &format!("{kind} latent space"))?;
        let path = out.join(format!("lda_{kind}.svg"));
        write_text(&path, &svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
