import hashlib
import json
import logging

import numpy as np

from config import LOG_LEVEL

logging.basicConfig(level=LOG_LEVEL, format='%(asctime)s %(name)s %(levelname)s %(message)s')
logger = logging.getLogger(__name__)


def get_string_hash(string):
    """
    计算字符串hash
    :param string: string, 字符串
    :return: string, 十六进制字符串
    """
    _hash = hashlib.sha1()
    _hash.update(string.encode("utf8"))
    return _hash.hexdigest()


def get_config_hash(config_dict):
    """
    计算配置字典的hash，键排序后再计算，用于结果溯源
    :param config_dict: dict, 可以被json序列化的配置
    :return: string, 十六进制字符串
    """
    return get_string_hash(json.dumps(config_dict, sort_keys=True, default=json_default))


def json_default(obj):
    """
    json.dumps 的 default 参数，处理 numpy 类型
    """
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"无法序列化的类型：{type(obj)}")


def format_seconds(seconds):
    """
    将秒数转成时分秒格式
    :param seconds: int/float, 秒数
    :return: "时:分:秒"
    """
    seconds = int(seconds)
    minutes, seconds = divmod(seconds, 60)
    hours, minutes = divmod(minutes, 60)
    return f"{hours:02d}:{minutes:02d}:{seconds:02d}"


def composite_gauss_legendre(num_cells, points_per_cell):
    """
    [0,1] 上均匀剖分的复合 Gauss-Legendre 求积
    :param num_cells: int, 小区间个数
    :param points_per_cell: int, 每个小区间的积分点数，对 2*points_per_cell-1 次多项式精确
    :return: (np.ndarray, np.ndarray), (积分点, 权重)，长度均为 num_cells*points_per_cell，积分点升序
    """
    t, w = np.polynomial.legendre.leggauss(points_per_cell)
    h = 1.0 / num_cells
    left = np.arange(num_cells) * h
    points = (left[:, None] + (t[None, :] + 1.0) * (h / 2)).ravel()
    weights = np.tile(w * (h / 2), num_cells)
    return points, weights


def tensor_apply(matrix, values, dim):
    """
    把一维矩阵按张量积作用到 dim 维数组的每个方向上
    dim=1 时为 matrix @ values，dim=2 时为 matrix @ values @ matrix.T
    :param matrix: np.ndarray, 形状 (p, q)
    :param values: np.ndarray, 形状 (q,)*dim
    :param dim: int, 1 或 2
    :return: np.ndarray, 形状 (p,)*dim
    """
    if dim == 1:
        return matrix @ values
    return matrix @ values @ matrix.T


def fit_log_log_slope(x, y):
    """
    log(y) 对 log(x) 的最小二乘斜率
    :param x: 正数序列
    :param y: 正数序列
    :return: (float, float), (斜率, 截距)
    """
    slope, intercept = np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)
    return float(slope), float(intercept)
