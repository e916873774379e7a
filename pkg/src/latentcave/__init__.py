"""latentcave: a small VAE teaching toolkit.

Train digit VAEs with hand-rolled gradients, render latent-space
interpolations as PGM frames and animated GIFs, and run the deterministic
shadow matching game that role-plays the encoder and decoder. The name nods
to Plato's cave: the latent object is the form, its projections the shadows.
"""

__version__ = "0.1.0"
