from .validation import check_frames, check_random_state, check_utterances

__all__ = ["check_frames", "check_random_state", "check_utterances"]
