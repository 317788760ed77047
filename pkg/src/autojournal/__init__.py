"""Turn timestamped smartphone screenshots into structured daily journals.

The pipeline has two interchangeable front-ends: a text stream that describes
screenshot chunks and summarizes the descriptions into a journal, and a video
stream that assembles the day's screenshots into one clip and summarizes that.
Generated journals are scored against human ground truth with a bidirectional
max-similarity metric over sentence embeddings.
"""

__version__ = "0.1.0"
