import hypothesis

# One registered profile so property tests run the same way everywhere.
hypothesis.settings.register_profile(
    "lagcast", deadline=None, derandomize=True, max_examples=60,
)
hypothesis.settings.load_profile("lagcast")
