pub mod contours;
pub mod manifest;
pub mod vtk;
