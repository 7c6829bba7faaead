"""Scikit-learn style front end for the CNN.

ConvNetClassifier wraps the functional training core behind the familiar
fit/predict/predict_proba surface so the model slots into sklearn pipelines
and grid searches (get_params/set_params come from BaseEstimator).
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .losses import compute_class_weights, one_hot
from .network import default_architecture
from .training import evaluate_accuracy, predict, train
from .validation import as_image_batch, check_labels, check_probability_rows


class ConvNetClassifier(BaseEstimator, ClassifierMixin):
    """Two-conv CNN for 28x28 grayscale images, trained with Adadelta.

    Parameters
    ----------
    include_dropout : keep the two dropout layers (victims) or drop them
        (extraction clones, which should overfit their stimuli).
    epochs, batch_size, learning_rate, rho, epsilon : training protocol.
    class_weight : None, "balanced", or an array of 10 per-class weights.
        "balanced" derives weights from the argmax of the training targets,
        the re-weighting used when fitting a clone on softmax responses.
    architecture : optional NetworkConfig overriding the stock layer stack.
    random_state : seed controlling init, shuffling, and dropout masks.

    fit() accepts integer labels or soft targets ([N,10] probability rows,
    e.g. another model's softmax outputs).
    """

    def __init__(
        self,
        include_dropout=True,
        epochs=12,
        batch_size=128,
        learning_rate=1.0,
        rho=0.95,
        epsilon=1e-7,
        class_weight=None,
        architecture=None,
        random_state=0,
        verbose=0,
    ):
        self.include_dropout = include_dropout
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.rho = rho
        self.epsilon = epsilon
        self.class_weight = class_weight
        self.architecture = architecture
        self.random_state = random_state
        self.verbose = verbose

    def _config(self):
        if self.architecture is not None:
            return self.architecture
        return default_architecture(include_dropout=self.include_dropout)

    def fit(self, X, y):
        config = self._config()
        spatial = config.input_shape[:2]
        X = as_image_batch(X, spatial=spatial)
        y = np.asarray(y)
        if y.ndim == 2:
            targets = check_probability_rows(y, config.num_classes).astype(np.float32)
        else:
            targets = one_hot(check_labels(y, config.num_classes), config.num_classes)

        if self.class_weight is None:
            weights = None
        elif isinstance(self.class_weight, str) and self.class_weight == "balanced":
            weights = compute_class_weights(targets)
        else:
            weights = np.asarray(self.class_weight, dtype=np.float64)

        self.config_ = config
        self.classes_ = np.arange(config.num_classes)
        self.class_weights_ = weights
        self.params_, self.history_ = train(
            config,
            X,
            targets,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.learning_rate,
            rho=self.rho,
            epsilon=self.epsilon,
            class_weights=weights,
            seed=self.random_state,
            verbose=self.verbose,
        )
        return self

    def predict_proba(self, X):
        X = as_image_batch(X, spatial=self.config_.input_shape[:2])
        return predict(self.config_, self.params_, X, batch_size=max(self.batch_size, 256))

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    def score(self, X, y):
        X = as_image_batch(X, spatial=self.config_.input_shape[:2])
        return evaluate_accuracy(self.config_, self.params_, X, check_labels(y))
