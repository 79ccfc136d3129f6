"""moltok: hierarchical molecular graph tokenization for language models.

Segments molecules into atom/motif/graph levels, encodes the augmented graph
with a message-passing network, and projects the result into LLM-ready token
embeddings, with the self-supervised objectives used to pre-train the encoder.
"""

__version__ = "0.1.0"
