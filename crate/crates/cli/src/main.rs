//! `gim`: encode meshes into multi-chart geometry images and back.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::SettingsArgs;

#[derive(Debug, Parser)]
#[command(name = "gim", version, about = "Multi-chart geometry image codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a mesh (OBJ or glTF) into a geometry image, albedo and sidecar.
    Encode {
        mesh: PathBuf,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
        /// Output file stem; defaults to the mesh file stem.
        #[arg(long)]
        id: Option<String>,
        /// Caption stored in the sidecar; repeatable.
        #[arg(long = "caption")]
        captions: Vec<String>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Rebuild a triangle mesh (OBJ) from a geometry image.
    Decode {
        /// `.meta` sidecar or position raster.
        gim: PathBuf,
        /// Albedo atlas to attach as the OBJ texture.
        albedo: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a mesh or geometry image; exit status 1 lists the violations.
    Validate {
        path: PathBuf,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Encode, decode and print the round-trip fidelity report.
    Stats {
        mesh: PathBuf,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Process every object listed in a manifest.
    Batch {
        manifest: PathBuf,
        #[command(flatten)]
        settings: SettingsArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode { mesh, output, id, captions, settings } => {
            commands::encode(&mesh, &output, id, captions, &settings)
        }
        Command::Decode { gim, albedo, output } => commands::decode(&gim, albedo.as_deref(), &output),
        Command::Validate { path, settings } => commands::validate(&path, &settings),
        Command::Stats { mesh, settings } => commands::stats(&mesh, &settings),
        Command::Batch { manifest, settings } => commands::batch(&manifest, &settings),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
