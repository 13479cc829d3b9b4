//! Writes the bundled meshes: `cargo run -p diffstruct --example gen_meshes -- data/meshes`

use std::path::PathBuf;

use diffstruct::mesh::{primitives, write_obj_file, TriangleMesh};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/meshes".into()));
    std::fs::create_dir_all(&dir)?;
    let meshes: [(&str, &str, TriangleMesh); 3] = [
        ("sphere.obj", "unit icosphere, frequency 12", primitives::icosphere(12, 1.0)),
        ("bar.obj", "planar bar 3 x 1, 60 x 20 cells", primitives::grid(60, 20, 3.0, 1.0)),
        ("torus.obj", "torus R 1 r 0.35, 48 x 24", primitives::torus(1.0, 0.35, 48, 24)),
    ];
    for (name, note, mesh) in meshes {
        let header = [note.to_string(), format!("{} vertices, {} faces", mesh.vertex_count(), mesh.face_count())];
        write_obj_file(dir.join(name), mesh.positions(), mesh.faces(), &header)?;
        println!("{name}: {} vertices, {} faces", mesh.vertex_count(), mesh.face_count());
    }
    Ok(())
}
