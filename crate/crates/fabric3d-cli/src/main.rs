fn main() {
    println!("fabric3d");
}
