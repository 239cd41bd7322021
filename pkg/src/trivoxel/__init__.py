"""trivoxel: vision-language voxel feature lifting, tri-plane state-space
fusion, sparse 3D convolution, and semantic occupancy evaluation at desk
scale, with seeded weights and oracle-verified kernels."""

__version__ = "0.1.0"
